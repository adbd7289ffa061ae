# Theorem registry and closed-form fidelity checks
