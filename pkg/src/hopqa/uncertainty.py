"""Evidential uncertainty for the triple-pruning step.

Top-K first-answer-token logits are mapped to positive Dirichlet evidence,
the aleatoric uncertainty of that Dirichlet is computed, and an accept/refine
decision is gated on a threshold. Note the uncertainty value is bounded above
by ln(K), so the gate can only fire when ln(K) exceeds the threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

ACCEPT = "accept"
REFINE = "refine"

# Asymptotic series coefficients: -B_{2n} / (2n), n = 1..7.
_DIGAMMA_SERIES = (
    -1.0 / 12.0,
    1.0 / 120.0,
    -1.0 / 252.0,
    1.0 / 240.0,
    -1.0 / 132.0,
    691.0 / 32760.0,
    -1.0 / 12.0,
)


def digamma(x: float) -> float:
    """Digamma via upward recurrence to x >= 10, then the asymptotic series.

    Accurate to ~1e-12 on positive arguments; poles raise ValueError.
    """
    if x <= 0 and x == math.floor(x):
        raise ValueError("digamma pole at nonpositive integer")
    result = 0.0
    if x < 0:
        # Reflection: psi(1-x) - psi(x) = pi * cot(pi x)
        return digamma(1.0 - x) - math.pi / math.tan(math.pi * x)
    while x < 10.0:
        result -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = inv2
    for coeff in _DIGAMMA_SERIES:
        series += coeff * power
        power *= inv2
    return result + math.log(x) - 0.5 / x + series


def softplus(x: float) -> float:
    if x > 30.0:
        return x
    return math.log1p(math.exp(-abs(x))) + max(x, 0.0)


@dataclass
class EvidenceVector:
    alphas: list[float]
    alpha_0: float

    def __post_init__(self):
        if not self.alphas:
            raise ValueError("alphas must be nonempty")
        if any(a <= 0 for a in self.alphas):
            raise ValueError("all alphas must be positive")
        if abs(self.alpha_0 - sum(self.alphas)) > 1e-12 * max(1.0, self.alpha_0):
            raise ValueError("alpha_0 must equal the sum of alphas")


@dataclass
class AUReport:
    au: float
    threshold: float
    decision: str
    alphas: EvidenceVector


def dirichlet_params(
    logits: Sequence[float], transform: str = "softplus", eps: float = 1e-6
) -> EvidenceVector:
    """Map raw logits to positive Dirichlet parameters.

    ``softplus`` is smooth and order-preserving; ``clamp`` floors at eps.
    """
    if len(logits) == 0:
        raise ValueError("logits must be nonempty")
    if transform == "softplus":
        alphas = [softplus(x) for x in logits]
    elif transform == "clamp":
        alphas = [max(float(x), eps) for x in logits]
    else:
        raise ValueError(f"unknown transform: {transform}")
    return EvidenceVector(alphas=alphas, alpha_0=sum(alphas))


def aleatoric_uncertainty(ev: EvidenceVector) -> float:
    """AU = -sum_k (a_k / a_0) * (psi(a_k + 1) - psi(a_0 + 1))."""
    psi_total = digamma(ev.alpha_0 + 1.0)
    return -sum(
        (a / ev.alpha_0) * (digamma(a + 1.0) - psi_total) for a in ev.alphas
    )


def gate(au: float, threshold: float) -> str:
    """Refine only when uncertainty strictly exceeds the threshold."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    return REFINE if au > threshold else ACCEPT


def assess(
    logits: Sequence[float],
    threshold: float = 1.55,
    transform: str = "softplus",
    eps: float = 1e-6,
) -> AUReport:
    ev = dirichlet_params(logits, transform=transform, eps=eps)
    au = aleatoric_uncertainty(ev)
    return AUReport(au=au, threshold=threshold, decision=gate(au, threshold), alphas=ev)
