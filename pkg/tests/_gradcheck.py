"""Finite-difference gradient checking shared by test modules.

Central differences are only trustworthy where the loss is locally
smooth.  ReLU cells have kinks, and zero-initialized biases can park a
pre-activation exactly on one (a unit whose inputs are all inactive at
t=0 sees precisely its zero bias), where the central difference
reports the mean of the two one-sided slopes no matter the step size.
Each sampled entry therefore also compares forward and backward
one-sided differences: at a kink they disagree by order one, at smooth
points only by O(eps), so kink entries are detected and excluded, with
a cap on how many exclusions are allowed.
"""

import numpy as np

from sparse_rnn.model import cross_entropy


def perturb_params(model, rng, scale=0.05):
    """Add uniform noise to every parameter.

    Freshly built models sit on a measure-zero configuration: biases
    are exactly zero, so with ReLU cells a unit whose inputs are all
    inactive has its pre-activation exactly on the kink, where no
    finite-difference scheme measures a derivative.  Generic parameters
    avoid that corner; the backward pass being checked is unchanged.
    """
    for _, param in model.iter_params():
        param += rng.uniform(-scale, scale, param.shape)


def max_relative_gradient_error(model, texts, labels, eps=1e-5, stride=7,
                                max_skip_fraction=0.1) -> float:
    """Worst relative error between analytic and FD gradients.

    Samples every `stride`-th entry of every parameter.  Entries whose
    one-sided differences disagree by more than 5% sit on (or next to)
    a kink and are skipped; more than `max_skip_fraction` of skips
    fails the check outright.
    """
    trace = model.forward(texts)
    model_grads = model.backward(trace, labels)

    def loss():
        return cross_entropy(model.forward(texts).logits, labels)

    base = loss()
    worst = 0.0
    checked = 0
    skipped = 0
    for name, param in model.iter_params():
        analytic = model_grads[name].reshape(-1)
        flat = param.reshape(-1)
        for j in range(0, flat.size, stride):
            orig = flat[j]
            flat[j] = orig + eps
            lp = loss()
            flat[j] = orig - eps
            lm = loss()
            flat[j] = orig
            fd = (lp - lm) / (2 * eps)
            fd_fwd = (lp - base) / eps
            fd_bwd = (base - lm) / eps
            gap = abs(fd_fwd - fd_bwd)
            if gap > 0.01 * max(abs(fd_fwd), abs(fd_bwd), 1e-6):
                skipped += 1
                continue
            checked += 1
            err = abs(fd - analytic[j]) / max(abs(fd), abs(analytic[j]), 1e-6)
            worst = max(worst, err)

    assert checked > 0, "every sampled entry was skipped"
    assert skipped <= max_skip_fraction * (checked + skipped), \
        f"{skipped} of {checked + skipped} entries sat on kinks"
    return worst
