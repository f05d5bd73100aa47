import logging
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional

from utils.errors import ParseError, ShapeMismatch
from utils.int_matrix import IntMat, IntVec
from utils.lp_exact import IpInstance, Provenance

logger = logging.getLogger(__name__)

DKP_HEADER = 'dkp-instance v1'
IP_HEADER = 'ip-instance v1'


@dataclass(frozen=True)
class Bundle:
    """Reformulated instance plus the matrices that produced it"""
    instance: Optional[IpInstance]
    method: str
    reduction: str
    U: Optional[IntMat] = None
    V: Optional[IntMat] = None
    x_b: Optional[IntVec] = None
    V_star: Optional[IntMat] = None
    shift: Optional[IntVec] = None
    certificate: Optional[Dict[str, str]] = None


def format_bound(value: Optional[Fraction], infinite: str) -> str:
    return infinite if value is None else str(value)


def parse_bound(token: str) -> Optional[Fraction]:
    if token in ('inf', '+inf', '-inf'):
        return None
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad bound {token!r}")


def _ints(tokens: List[str], key: str) -> IntVec:
    try:
        return tuple(int(t) for t in tokens)
    except ValueError:
        raise ParseError(f"key {key!r} expects integers, got {' '.join(tokens)!r}")


def _key_values(lines: List[str], section: str) -> Dict[str, str]:
    pairs = {}
    for line in lines:
        parts = line.split(None, 1)
        if not parts:
            continue
        if len(parts) != 2:
            raise ParseError(f"[{section}] line {line.strip()!r} needs a key and a value")
        pairs[parts[0]] = parts[1].strip()
    return pairs


class InstanceFileService:
    """Native text formats for instances, reformulation bundles and matrices"""

    # Instances

    def serialize_instance(self, inst: IpInstance) -> str:
        """Canonical text; knapsacks use the dkp form, everything else the general form"""
        try:
            view = inst.knapsack_view()
        except ShapeMismatch:
            view = None
        if view is not None and all(b is not None and b.denominator == 1 for b in (view.beta1, view.beta2)):
            lines = [DKP_HEADER]
            if inst.name:
                lines.append(f"name {inst.name}")
            lines.append(f"form {'eq' if view.is_equality else 'ineq'}")
            lines.append(f"n {inst.n}")
            lines.append('a ' + ' '.join(str(v) for v in view.a))
            if view.is_equality:
                lines.append(f"beta {view.beta1}")
            else:
                lines.append(f"beta1 {view.beta1}")
                lines.append(f"beta2 {view.beta2}")
            lines.append('u ' + ' '.join('inf' if v is None else str(v) for v in view.u))
        else:
            lines = [IP_HEADER]
            if inst.name:
                lines.append(f"name {inst.name}")
            lines.append(f"n {inst.n}")
            lines.append(f"m {inst.m}")
            lines.append('A')
            lines.extend(' '.join(str(v) for v in row) for row in inst.A.rows())
            lines.append('lo ' + ' '.join(format_bound(v, '-inf') for v in inst.lo))
            lines.append('hi ' + ' '.join(format_bound(v, 'inf') for v in inst.hi))
        if inst.provenance is not None:
            prov = inst.provenance
            lines.append('p ' + ' '.join(str(v) for v in prov.p))
            lines.append('r ' + ' '.join(str(v) for v in prov.r))
            lines.append(f"M {prov.M}")
            lines.append(f"k {prov.k}")
        return '\n'.join(lines) + '\n'

    def parse_instance(self, text: str) -> IpInstance:
        lines = [line.strip() for line in text.splitlines()]
        lines = [line for line in lines if line and not line.startswith('#')]
        if not lines:
            raise ParseError("empty instance file")
        header = lines[0]
        if header not in (DKP_HEADER, IP_HEADER):
            raise ParseError(f"unknown header {header!r}")

        fields: Dict[str, List[str]] = {}
        rows: List[IntVec] = []
        i = 1
        while i < len(lines):
            key, *rest = lines[i].split()
            if key == 'A':
                m = self._int(fields, 'm', default=0)
                n = self._int(fields, 'n', default=0)
                block = lines[i + 1:i + 1 + m]
                if len(block) != m:
                    raise ParseError(f"A block needs {m} rows")
                rows = [_ints(line.split(), 'A') for line in block]
                if any(len(row) != n for row in rows):
                    raise ParseError(f"every A row needs {n} entries")
                i += 1 + m
                continue
            if key == 'name':
                rest = [lines[i][len('name'):].strip()]
            if key in fields:
                raise ParseError(f"duplicate key {key!r}")
            fields[key] = rest
            i += 1

        name = fields.get('name', [''])[0]
        provenance = self._parse_provenance(fields)
        n = self._int(fields, 'n')

        if header == DKP_HEADER:
            a = _ints(self._need(fields, 'a'), 'a')
            u = tuple(None if t == 'inf' else _ints([t], 'u')[0] for t in self._need(fields, 'u'))
            if len(a) != n or len(u) != n:
                raise ParseError(f"a and u need {n} entries")
            form = self._one(fields, 'form')
            if form == 'eq':
                beta1 = beta2 = self._int(fields, 'beta')
            elif form == 'ineq':
                beta1, beta2 = self._int(fields, 'beta1'), self._int(fields, 'beta2')
            else:
                raise ParseError(f"form must be eq or ineq, got {form!r}")
            return IpInstance.knapsack(a, beta1, beta2, u, name=name, provenance=provenance)

        if not rows:
            raise ParseError("general instance needs an A block")
        lo = tuple(parse_bound(t) for t in self._need(fields, 'lo'))
        hi = tuple(parse_bound(t) for t in self._need(fields, 'hi'))
        if len(lo) != len(rows) or len(hi) != len(rows):
            raise ParseError("lo and hi need one entry per row")
        return IpInstance(IntMat.from_rows(rows, ncols=n), lo, hi, name=name, provenance=provenance)

    def write_instance(self, inst: IpInstance, path: str) -> str:
        self._ensure_parent(path)
        with open(path, 'w') as f:
            f.write(self.serialize_instance(inst))
        logger.info(f"Instance written to {path}")
        return path

    def read_instance(self, path: str) -> IpInstance:
        try:
            with open(path) as f:
                return self.parse_instance(f.read())
        except OSError as e:
            raise ParseError(f"cannot read {path}: {e}")

    # Bundles

    def serialize_bundle(self, reform, shift: Optional[IntVec] = None) -> str:
        """Reformulated instance followed by its matrix blocks"""
        from services.reformulation_service import AhlReform, NoIntegerSolution, RangespaceReform

        if isinstance(reform, NoIntegerSolution):
            return '\n'.join([
                '[reform]', 'method ahl', 'reduction none',
                '[certificate]', f"row {reform.row}", f"diagonal {reform.diagonal}",
                f"residual {reform.residual}",
            ]) + '\n'

        parts = [self.serialize_instance(reform.inst_new)]
        method = 'rangespace' if isinstance(reform, RangespaceReform) else 'ahl'
        parts.append(f"[reform]\nmethod {method}\nreduction {reform.profile.method}\n")
        if isinstance(reform, RangespaceReform):
            parts.append('[U]\n' + reform.U.to_text())
        elif isinstance(reform, AhlReform):
            parts.append('[V]\n' + reform.V.to_text())
            parts.append('[x_b]\n' + ' '.join(str(v) for v in reform.x_b) + '\n')
            parts.append('[V*]\n' + reform.V_star.to_text())
        if shift is not None:
            parts.append('[shift]\n' + ' '.join(str(v) for v in shift) + '\n')
        return ''.join(parts)

    def parse_bundle(self, text: str) -> Bundle:
        sections: Dict[str, List[str]] = {'': []}
        current = ''
        for line in text.splitlines():
            stripped = line.strip()
            if stripped.startswith('[') and stripped.endswith(']'):
                current = stripped[1:-1]
                sections[current] = []
            else:
                sections[current].append(line)

        meta = _key_values(sections.get('reform', []), 'reform')
        if 'method' not in meta:
            raise ParseError("bundle lacks a [reform] section with a method")
        if 'certificate' in sections:
            cert = _key_values(sections['certificate'], 'certificate')
            return Bundle(instance=None, method=meta['method'], reduction=meta.get('reduction', 'none'),
                          certificate=cert)

        def matrix(key):
            return IntMat.from_text('\n'.join(sections[key])) if key in sections else None

        def vector(key):
            if key not in sections:
                return None
            return _ints(' '.join(sections[key]).split(), key)

        return Bundle(
            instance=self.parse_instance('\n'.join(sections[''])),
            method=meta['method'],
            reduction=meta.get('reduction', 'LLL'),
            U=matrix('U'),
            V=matrix('V'),
            x_b=vector('x_b'),
            V_star=matrix('V*'),
            shift=vector('shift'),
        )

    def write_bundle(self, reform, path: str, shift: Optional[IntVec] = None) -> str:
        self._ensure_parent(path)
        with open(path, 'w') as f:
            f.write(self.serialize_bundle(reform, shift))
        logger.info(f"Reformulation bundle written to {path}")
        return path

    def write_matrix(self, matrix: IntMat, path: str) -> str:
        self._ensure_parent(path)
        with open(path, 'w') as f:
            f.write(matrix.to_text())
        return path

    # Helpers

    @staticmethod
    def _ensure_parent(path: str):
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)

    @staticmethod
    def _need(fields: Dict[str, List[str]], key: str) -> List[str]:
        if key not in fields:
            raise ParseError(f"missing key {key!r}")
        return fields[key]

    def _one(self, fields: Dict[str, List[str]], key: str) -> str:
        values = self._need(fields, key)
        if len(values) != 1:
            raise ParseError(f"key {key!r} takes exactly one value")
        return values[0]

    def _int(self, fields: Dict[str, List[str]], key: str, default: Optional[int] = None) -> int:
        if default is not None and key not in fields:
            return default
        return _ints([self._one(fields, key)], key)[0]

    def _parse_provenance(self, fields: Dict[str, List[str]]) -> Optional[Provenance]:
        present = [key for key in ('p', 'r', 'M', 'k') if key in fields]
        if not present:
            return None
        if len(present) != 4:
            raise ParseError("provenance needs all of p, r, M, k")
        try:
            return Provenance(
                p=_ints(fields['p'], 'p'),
                r=_ints(fields['r'], 'r'),
                M=self._int(fields, 'M'),
                k=self._int(fields, 'k'),
            )
        except ValueError as e:
            raise ParseError(f"bad provenance: {e}")
