"""Turn one averaged spectrum into a Monte-Carlo training population.

A measured magnitude curve arrives with a coherence per frequency line.
Coherence pins down the measurement noise, so instead of collecting
hundreds of repeat measurements we redraw plausible curves around the
mean and train on those.
"""

import numpy as np

from frfselect import (
    ModalMode,
    SyntheticPopulationSpec,
    coherence_std,
    monte_carlo_expand,
    population_spectrum,
    spectrum_to_datasets,
    synth_population,
)


def main() -> None:
    pop = synth_population(
        SyntheticPopulationSpec(
            modes=(ModalMode(40.0, 0.04), ModalMode(90.0, 0.03)),
            class_shift=(4.0, -5.0),
            nuisance_band=(130.0, 190.0),
            noise_sd=0.0,
            n_samples=1,
            seed=7,
            n_tasks=1,
            n_features=48,
        )
    )
    healthy = population_spectrum(pop, task=0, label=0, coherence=0.92)
    damaged = population_spectrum(pop, task=0, label=1, coherence=0.92)

    print("per-line uncertainty implied by coherence (first 6 lines):")
    print(f"{'freq_hz':>8} {'|H|':>8} {'coh':>5} {'sigma':>8}")
    for line in healthy[:6]:
        print(
            f"{line.freq:8.1f} {line.h_mean:8.4f} {line.coherence:5.2f} "
            f"{coherence_std(line):8.5f}"
        )

    draws = monte_carlo_expand(healthy, n_intermediate=10_000, n_out=400, seed=3)
    sigma = np.array([coherence_std(line) for line in healthy])
    mean_err = np.abs(draws.mean(axis=0) - [line.h_mean for line in healthy]).max()
    sd_ratio = (draws.std(axis=0, ddof=1) / sigma).mean()
    print(f"\n400 two-stage draws: max |sample mean - h_mean| = {mean_err:.4f}")
    print(f"mean sample-sd / closed-form sigma = {sd_ratio:.3f} (want ~1)")

    one_stage = monte_carlo_expand(
        healthy, n_intermediate=10_000, n_out=400, seed=3, two_stage=False
    )
    print(f"one-stage draws differ from two-stage: {not np.allclose(draws, one_stage)}")

    train, test = spectrum_to_datasets(
        healthy,
        damaged,
        n_train_per_class=80,
        n_test_per_class=40,
        seed=11,
        task_id="bench",
    )
    print(f"\ndatasets: train {train.features.shape}, test {test.features.shape}")
    print(f"train labels balanced: {int(train.labels.sum())}/{train.n_samples}")


if __name__ == "__main__":
    main()
