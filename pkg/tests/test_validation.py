import numpy as np
import pytest

from porocdh import cagniard as cg
from porocdh.errors import DomainError
from porocdh.greens import Problem, Receiver
from porocdh.validation import (audit, check_arrivals, check_continuity, check_eigen,
                                check_null_interface, check_paths, check_rescaling,
                                fermat_head_wave, fermat_two_leg)

from conftest import BULK, H, R1, R2, TOP


def test_two_leg_mirror_case():
    assert fermat_two_leg(500, 533, 400, 2000, 2000) == pytest.approx(np.hypot(400, 1033) / 2000,
                                                                        abs=1e-12)


def test_two_leg_vertical():
    assert fermat_two_leg(500, 533, 0.0, 2000, 1000) == 500 / 2000 + 533 / 1000


def test_two_leg_matches_implementation(pairs):
    p = next(q for q in pairs["r2"] if q.label == "PfPf")
    assert abs(fermat_two_leg(500, 533, 400, p.V1, p.V2) - cg.arrival_time(p)) <= 1e-9


def test_head_oracle_collapses_when_no_refractor_is_faster():
    # Vmax equal to both legs: the head path degenerates to the two-leg time
    assert fermat_head_wave(500, 533, 400, 2000, 2000, 2000) == pytest.approx(
        fermat_two_leg(500, 533, 400, 2000, 2000), abs=1e-9)


def test_head_oracle_guard():
    with pytest.raises(DomainError):
        fermat_head_wave(500, 533, 400, 2000, 3000, 2500)


def test_head_oracle_matches_closed_form(top, bottom):
    p = cg.make_pairs(top, bottom, 500.0, 3000.0, 533.0)[5]  # reflected PsS
    c1 = np.sqrt(1 / p.V1**2 - 1 / p.Vmax**2)
    c2 = np.sqrt(1 / p.V2**2 - 1 / p.Vmax**2)
    closed = 500 * c1 + 533 * c2 + 3000 / p.Vmax
    assert fermat_head_wave(500, 533, 3000, p.V1, p.V2, p.Vmax) == pytest.approx(closed, abs=1e-6)


def test_no_refraction_when_incident_leg_is_fastest(top, bottom):
    # the fast leg already travels at Vmax: the least-time path is the reflected ray
    p = cg.make_pairs(top, bottom, 500.0, 400.0, 533.0)[2]  # reflected PfS
    assert not cg.head_window(p).head_exists
    assert fermat_head_wave(500, 533, 400, p.V1, p.V2, p.Vmax) == pytest.approx(
        cg.arrival_time(p), abs=1e-9)


def test_eigen_and_null_checks(top, bottom):
    assert check_eigen({"top": top, "bottom": bottom}).passed
    r = check_null_interface(top)
    assert r.passed and r.max_error < 1e-10


def test_path_audit(pairs):
    for r in check_paths(pairs["r1"] + pairs["r2"], n=120, seed=3):
        assert r.passed, r


def test_arrival_audit(pairs):
    assert all(r.passed for r in check_arrivals(pairs["r1"] + pairs["r2"]))


def test_continuity(bulk_problem):
    assert check_continuity(bulk_problem, 400.0).passed


def test_rescaling_survives_sign_flip(bulk_problem):
    r = check_rescaling(bulk_problem, [R1], np.array([0.9, 1.0]), factors=(-1.0,))
    assert r.passed


def test_audit_reports_failures_without_raising():
    p = Problem.build(TOP, TOP, H, BULK)
    reps = audit(p, [Receiver(400.0, 0.0, 533.0)], samples=24)
    assert len(reps) >= 8
    assert all(np.isfinite(r.max_error) for r in reps)
