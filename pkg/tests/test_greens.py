import dataclasses

import numpy as np
import pytest

from porocdh.errors import DomainError
from porocdh.greens import (Problem, Receiver, ReceiverModel, incident_green, rotate_to_3d,
                            scattered_green, total_green)
from porocdh.material import SourceAmplitudes

from conftest import BOTTOM, BULK, H, R1, R2, TOP


def test_receiver_on_interface_rejected():
    with pytest.raises(DomainError):
        Receiver(400.0, 0.0, 0.0)


def test_incident_closed_form(bulk_problem):
    p = bulk_problem
    t = 0.2
    r = np.hypot(400.0, 33.0)
    amp = -p.top.P[0, 0] * p.modal.F_Pf / p.top.V_Pf**2 * t / (4 * np.pi * r**3)
    ux, uz = incident_green("Pf", p.modal, p.top, R1, t, H)
    assert ux == pytest.approx(amp * 400.0, rel=1e-14)
    assert uz == pytest.approx(amp * 33.0, rel=1e-14)
    assert incident_green("Pf", p.modal, p.top, R1, 0.1, H) == (0.0, 0.0)


def test_zero_before_every_arrival(bulk_problem):
    for rec in (R1, R2):
        s = total_green(rec, 0.1, bulk_problem)
        assert s.u_x == 0.0 and s.u_z == 0.0


def test_direct_wave_only_before_reflections(bulk_problem):
    m = ReceiverModel(bulk_problem, R1)
    t = 0.3
    s = m.sample(t)
    ux, uz = incident_green("Pf", bulk_problem.modal, bulk_problem.top, R1, t, H)
    assert (s.u_x, s.u_z) == (ux, uz)


def test_per_wave_breakdown_sums(bulk_problem):
    s = total_green(R2, 1.3, bulk_problem)
    assert s.u_z == pytest.approx(sum(v[1] for v in s.waves.values()), rel=1e-14)
    assert len(s.waves) == 6


def test_on_axis_has_no_horizontal_component(bulk_problem):
    m0 = ReceiverModel(bulk_problem, Receiver(0.0, 0.0, 533.0))
    m1 = ReceiverModel(bulk_problem, Receiver(1e-3, 0.0, 533.0))
    s0, s1 = m0.sample(0.8), m1.sample(0.8)
    assert s0.u_x == 0.0
    assert abs(s1.u_x) <= 1e-3 * abs(s1.u_z)


def _homogeneous():
    return Problem.build(TOP, TOP, H, BULK)


def test_transmission_through_null_interface_is_direct_wave():
    p = _homogeneous()
    rec = Receiver(400.0, 0.0, -533.0)
    for mode in ("Pf", "Ps"):
        pair = next(q for q in p.pairs(rec) if q.label == mode + mode)
        t0 = np.hypot(400.0, 1033.0) / p.top.speed(mode)
        for t in t0 * np.array([1.01, 1.3, 1.9]):
            got = scattered_green(pair, p, t)
            dz = -533.0 - H
            r = np.hypot(400.0, dz)
            amp = -p.top.P[0, 0 if mode == "Pf" else 1] * p.modal.of(mode) / p.top.speed(mode) ** 2
            amp *= t / (4 * np.pi * r**3)
            assert got[0] == pytest.approx(amp * 400.0, rel=1e-9)
            assert got[1] == pytest.approx(amp * dz, rel=1e-9)


def test_generic_engine_matches_closed_form_reflection(bulk_problem):
    fam = ReceiverModel(bulk_problem, R1)
    for label in ("PfPf", "PsPs"):
        pair = next(q for q in bulk_problem.pairs(R1) if q.label == label)
        generic = dataclasses.replace(pair, closed_form=False)
        t = fam.onset(label) + 0.1
        a = scattered_green(pair, bulk_problem, t)
        b = scattered_green(generic, bulk_problem, t)
        assert np.allclose(a, b, rtol=1e-9, atol=0)


def test_rotation():
    assert rotate_to_3d(2.0, 1.0, 7.0, 0.0) == (2.0, 0.0, 1.0)
    ux, uy, uz = rotate_to_3d(2.0, 1.0, 0.0, 7.0)
    assert (ux, uy, uz) == (0.0, 2.0, 1.0)
    ux, uy, uz = rotate_to_3d(1.0, 0.5, 3.0, 4.0)
    assert (ux, uy) == pytest.approx((0.6, 0.8), rel=1e-15)


def test_linear_in_the_source(bulk_problem):
    twice = Problem.build(TOP, BOTTOM, H, SourceAmplitudes(-2e10, -2e10, 0.0))
    a = total_green(R2, 1.0, bulk_problem)
    b = total_green(R2, 1.0, twice)
    assert b.u_z == pytest.approx(2 * a.u_z, rel=1e-12)
