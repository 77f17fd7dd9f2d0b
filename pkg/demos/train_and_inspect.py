"""Train a net on the single-constraint rosenbrock family and inspect it.

Walks the basic loop: sample parameters, train unsupervised with the
piecewise penalty, read the training log, save the model, reload it and
check the round trip.  Runs in about 15 seconds.
"""

import os

import numpy as np

from penalearn import (
    TrainConfig,
    load_model,
    mac_count,
    make_problem,
    mlp_forward,
    save_model,
    train,
)

OUT_DIR = "demo_output"


def main():
    spec = make_problem("rosenbrock-1c")
    print(f"problem: {spec.name}")
    print(f"  params d={spec.param_dim}, decisions k={spec.decision_dim}")
    shape = spec.default_net_shape
    print(f"  default net {shape}, {mac_count(shape)} MACs")
    print()

    cfg = TrainConfig(seed=0)
    print(f"training: {cfg.epochs} epochs, {cfg.sample_count} samples, lr={cfg.learning_rate}")
    net, log = train(spec, cfg)

    print()
    print(f"{'epoch':>6} {'loss':>12} {'objective':>12} {'penalty':>12} {'feasible':>9}")
    for e in log.entries:
        print(
            f"{e.epoch:>6} {e.mean_loss:>12.5g} {e.mean_objective:>12.5g} "
            f"{e.mean_penalty:>12.5g} {e.feasible_frac:>9.3f}"
        )
    print(f"\ntrained in {log.final().elapsed_s:.1f}s")

    os.makedirs(OUT_DIR, exist_ok=True)
    path = os.path.join(OUT_DIR, "rosenbrock-1c.model")
    save_model(net, path)
    print(f"saved -> {path}")

    net2 = load_model(path)
    p = np.array([[5.0, 0.1]])
    a, _ = mlp_forward(net, p)
    b, _ = mlp_forward(net2, p)
    assert np.array_equal(a, b)
    print(f"reloaded model agrees bit for bit: x({p[0]}) = {a[0]}")


if __name__ == "__main__":
    main()
