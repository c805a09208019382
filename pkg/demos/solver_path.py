"""Watch the coordinate solver walk its regularization path.

Weights move in fixed increments of epsilon, so every iterate sits on a
lattice. The running lambda is the smallest loss-per-penalty gain seen
so far; a nonzero lambda floor stops the fit while the penalty still
bites, which is where sparse supports come from.
"""

import numpy as np

from frfselect import (
    ModalMode,
    SolverConfig,
    SyntheticPopulationSpec,
    fit,
    gini_index,
    synth_population,
)


def show(title, result, freqs) -> None:
    print(f"\n{title}")
    print(f"{'iter':>4} {'kind':>8} {'feat':>4} {'task':>4} {'lambda':>8} {'total':>8}")
    steps = result.trace.steps
    head = steps[:10]
    for s in head:
        print(
            f"{s.iteration:4d} {s.kind:>8} {s.feature:4d} {s.task:4d} "
            f"{s.lambda_after:8.4f} {s.total_loss_after:8.4f}"
        )
    if len(steps) > len(head):
        print(f"   ... {len(steps) - len(head)} more steps")
    w = result.weights.column(0)
    active = np.flatnonzero(w)
    print(f"terminated by: {result.trace.terminated_by} after {len(steps)} steps")
    print(f"support: {[f'{freqs[j]:.0f}Hz:{w[j]:+.1f}' for j in active]}")
    print(f"sparsity (gini): {gini_index(w):.3f}")


def main() -> None:
    pop = synth_population(
        SyntheticPopulationSpec(
            modes=(ModalMode(60.0, 0.03),),
            class_shift=(5.0,),
            nuisance_band=(130.0, 190.0),
            noise_sd=0.3,
            n_samples=80,
            seed=2,
            n_tasks=1,
            n_features=64,
            nuisance_modes=2,
            nuisance_class_shift=2.0,
        )
    )
    task = pop.tasks[0]

    deep = fit([task], SolverConfig(0.2, 0.01, max_iters=150))
    show("no floor: runs until nothing improves (or max_iters)", deep, pop.freqs)

    floored = fit([task], SolverConfig(0.2, 0.01, max_iters=150, lambda_floor=0.05))
    show("lambda_floor=0.05: stops early, keeps only the strong features",
         floored, pop.freqs)


if __name__ == "__main__":
    main()
