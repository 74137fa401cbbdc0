"""Exact computations for algebraic dynamical systems over Z^d."""