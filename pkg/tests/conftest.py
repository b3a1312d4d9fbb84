import pytest

from irsmimo.arrays import ArraySpec, grid_directions
from irsmimo.channel import (CascadeChannel, IrsLink, LinkAngles,
                             PhysicalConstants, compensation_factor, make_link)
from irsmimo.codebook import build_codebook
from irsmimo.training import LinkScenario


def scenario_from_angles(angle_sets, distances=None, num_antennas=16,
                         num_irs_elements=16, num_beams=32, sweep_beams=32,
                         branching=2, beta=1.0):
    """Small scene with hand-picked true angles for protocol tests."""
    consts = PhysicalConstants(
        carrier_frequency=3e11,
        absorption_coefficient=0.0033,
        tx_gain=10 ** 1.8,
        rx_gain=10 ** 1.8,
        reflection_amplitude=beta,
    )
    tx = ArraySpec(num_antennas)
    rx = ArraySpec(num_antennas)
    irs = ArraySpec(num_irs_elements)
    if distances is None:
        distances = [(5.0, 6.0)] * len(angle_sets)
    links = []
    for angles, (d_in, d_out) in zip(angle_sets, distances):
        a = LinkAngles(*angles)
        links.append(IrsLink(
            incident=make_link(consts, tx, irs, a.tx_departure,
                               a.irs_arrival, d_in),
            departing=make_link(consts, irs, rx, a.irs_departure,
                                a.rx_arrival, d_out),
            eta=compensation_factor(consts, num_irs_elements),
            distance_in=d_in,
            distance_out=d_out,
            angles=a,
        ))
    cascade = CascadeChannel(links=tuple(links), tx_spec=tx, rx_spec=rx,
                             irs_spec=irs)
    book = build_codebook(tx, branching, num_beams)
    return LinkScenario(
        consts=consts,
        cascade=cascade,
        sweep_grid=grid_directions(num_irs_elements, sweep_beams),
        tx_codebook=book,
        rx_codebook=book,
    )


@pytest.fixture
def small_scenario():
    return scenario_from_angles([(0.2, -0.55, 0.4, -0.1)])
