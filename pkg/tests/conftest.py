import numpy as np
import pytest

from pacs import Dataset, split_groups


@pytest.fixture
def tiny_dataset():
    return Dataset(
        y=np.array([2.0, 4.0, 1.0, 3.0]),
        d=np.array([1.0, 1.0, 0.0, 0.0]),
        x=np.array([[0.5, 1.0], [-0.5, 2.0], [1.5, 0.0], [0.0, -1.0]]),
        names=("x1", "x2"),
    )


def random_dataset(rng, n=40, p=3, treated_frac=0.5):
    """Small random dataset with a guaranteed non-empty split."""
    x = rng.standard_normal((n, p))
    d = (rng.random(n) < treated_frac).astype(float)
    d[0], d[1] = 1.0, 0.0  # both arms non-empty
    y = x @ rng.standard_normal(p) + rng.standard_normal(n)
    return Dataset(y=y, d=d, x=x, names=tuple(f"x{j+1}" for j in range(p)))


def random_arm_sample(rng, n=25, p=3):
    """A (GroupView, p_hat) pair for one arm of a random dataset."""
    ds = random_dataset(rng, n=n, p=p)
    t, c = split_groups(ds)
    p_hat = rng.uniform(0.2, 0.8, size=ds.n)
    return ds, t, c, p_hat
