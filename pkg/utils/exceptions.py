"""
Hierarquia de exceções do chaoslab.

Cada classe carrega o código de saída usado pelos comandos de gerenciamento:
1 para configuração inválida, 2 para pré-condição violada e 3 para a guarda
numérica (NaN/overflow).
"""


class ChaosLabError(Exception):
    """Erro base do motor de simulação."""

    exit_code = 2


class ConfigurationError(ChaosLabError):
    """Configuração ou arquivo de entrada ilegível."""

    exit_code = 1


class PreconditionError(ChaosLabError, ValueError):
    """Argumentos válidos sintaticamente mas fora do domínio da operação."""

    exit_code = 2


class NumericalGuardError(ChaosLabError, ArithmeticError):
    """Valor não finito detectado antes da agregação."""

    exit_code = 3


class MonteCarloBudgetError(PreconditionError):
    """Orçamento de ensaios não positivo."""
