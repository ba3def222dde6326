import pytest

from mimodec import generate_instance, make_constellation, preprocess


@pytest.fixture(scope="session")
def constellations():
    return {kind: make_constellation(kind) for kind in ("bpsk", "qpsk", "qam16", "qam64")}


def problem_for(kind, m, n, snr_db, seed, radius="formula"):
    inst = generate_instance(m, n, make_constellation(kind), snr_db, seed)
    return inst, preprocess(inst, radius)
