"""dkplab services: generation, reformulation, branch-and-bound, files, experiments"""
