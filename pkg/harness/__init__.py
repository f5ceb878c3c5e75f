"""
Harness de experimentos: geradores, execução semeada e relatórios
"""
