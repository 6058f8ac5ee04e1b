"""
Módulo de tests de productos aleatorios de contracciones.
"""
