"""
fbsfilter: filtrado no lineal de campos aleatorios de dos parámetros observados
con ruido de lámina browniana fraccionaria.
"""

__version__ = '1.0.0'
