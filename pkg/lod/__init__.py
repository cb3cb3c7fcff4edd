"""
Решатель LOD (Localized Orthogonal Decomposition) для нелинейных монотонных эллиптических задач.
"""

__version__ = "0.3.0"
