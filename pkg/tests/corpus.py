"""Polynomial expressions used by the compiler tests and the acceptance suite."""

CORPUS = [
    "z",
    "z^2",
    "z*conj(z)",
    "z*w",
    "(z1+z2)*z3",
    "z^4 - 2*z^2 + 1",
    "conj(z)",
    "z + w",
    "z - w",
    "3*z",
    "0.25*z",
    "-2*z + 1",
    "z^3",
    "z^2*conj(z)",
    "(z - 1i)*(z + 1i)",
    "z*w + conj(w)",
    "z1*z2*z3",
    "(z+w)^2 - (z-w)^2",
    "conj(z^2) + 0.5*w",
    "z^2 + w^2 + z3^2",
    "z*conj(w) - conj(z)*w",
    "(1+1i)*z - 0.5",
    "z^4",
    "(z + conj(z))^2",
]
