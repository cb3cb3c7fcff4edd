"""
Вспомогательные функции и утилиты.
"""
