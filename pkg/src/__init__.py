"""
Productos aleatorios de contracciones en espacios ℓ_p de dimensión finita.

Motor de iteración con auditorías, verificadores de las condiciones (W) y
(W'), falsificador sobre palabras del semigrupo y catálogo de escenarios.
"""

__version__ = "1.0.0"
__author__ = "Equipo de Automatizacion"
__description__ = "Productos aleatorios de contracciones y condiciones (W)/(W')"
