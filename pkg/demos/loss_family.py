"""Tour of the loss family: one formula, many degenerations.

The unified pair loss jointly penalizes every (between-class,
within-class) similarity pair. Special cases fall out by restricting
the group shape or the parameters:

* K = 1 positives  -> additive-margin softmax
* m = 0            -> NormFace-style normalized softmax
* gamma -> inf     -> hard-mining triplet hinge (after 1/gamma scaling)

Re-weighting each score by its distance from the optimum turns the
linear decision boundary into a circle — the circle loss.
"""

import math

import numpy as np

from pairsim import (
    CircleParams,
    SimilarityGroup,
    UnifiedParams,
    am_softmax_loss,
    circle_loss,
    circle_weights,
    triplet_hard_loss,
    unified_loss,
)


def main():
    g = SimilarityGroup(sp=np.array([0.62]), sn=np.array([0.35, 0.18, 0.07]))
    p = UnifiedParams(gamma=64.0, m=0.25)

    print("== unified loss vs its AM-Softmax rearrangement (K = 1) ==")
    a = unified_loss(g, p)
    b = am_softmax_loss(g.sp[0], g.sn, p)
    print(f"  unified    = {a:.15g}")
    print(f"  am_softmax = {b:.15g}")
    print(f"  |diff|     = {abs(a - b):.3g}  (two float paths, same formula)\n")

    print("== gamma -> inf recovers the hard-mining triplet hinge ==")
    gm = SimilarityGroup(sp=np.array([0.5, 0.8]), sn=np.array([0.2, 0.4]))
    hinge = triplet_hard_loss(gm, 0.3)
    for gamma in (10.0, 1e2, 1e4):
        scaled = unified_loss(gm, UnifiedParams(gamma, 0.3)) / gamma
        bound = math.log(1 + gm.k * gm.l) / gamma
        print(f"  gamma={gamma:>7g}: L/gamma={scaled:.6f}  hinge={hinge:.6f}"
              f"  gap<= {bound:.2e}")
    print()

    print("== circle loss: self-paced weights redistribute the pressure ==")
    cp = CircleParams.reduced(gamma=64.0, m=0.25)
    # A point that already has good sp but bad sn...
    unbalanced = SimilarityGroup(sp=np.array([0.8]), sn=np.array([0.8]))
    ap, an = circle_weights(unbalanced, cp)
    print(f"  at (sn, sp) = (0.8, 0.8): alpha_p = {ap[0]:.2f}, alpha_n = {an[0]:.2f}")
    print("  the between-class score, far from its optimum 0, is weighted harder.")
    print(f"  circle loss there = {circle_loss(unbalanced, cp):.4f}")


if __name__ == "__main__":
    main()
