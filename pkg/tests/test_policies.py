import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bgpdeploy.attestation import ROA, Prefix, Validity
from bgpdeploy.policies import (
    ROVPP_KINDS,
    PolicyAssignment,
    PolicyKind,
    PolicyOptions,
    Registries,
    build_registries,
    egress_transform,
    ingress_accept,
    rib_react,
)
from bgpdeploy.routing import Announcement, propagate
from bgpdeploy.scenarios import SUBPREFIX, VICTIM_PREFIX, AttackKind, ScenarioError, make_scenario
from bgpdeploy.synthetic import random_small
from bgpdeploy.topology import Relationship, parse_caida

C, R, P = Relationship.CUSTOMER, Relationship.PEER, Relationship.PROVIDER
V, A = 10, 66
ROAS = frozenset({ROA(VICTIM_PREFIX, V, 16)})


def reg(graph=None, aspa=None, **opts):
    return Registries(ROAS, aspa or {}, graph, PolicyOptions(**opts))


def ann(path, rel=None, prefix=VICTIM_PREFIX, **kw):
    return Announcement(prefix, tuple(path), rel, **kw)


def test_policy_kind_parse():
    assert PolicyKind.parse("ROVPPv2ImprovedLite") is PolicyKind.ROVPP_V2_IMPROVED_LITE
    assert str(PolicyKind.AS_CONES) == "ASCones"
    with pytest.raises(ValueError):
        PolicyKind.parse("BGPsec")


def test_assignment_kind_of():
    a = PolicyAssignment(frozenset({1}), PolicyKind.ROV)
    assert a.kind_of(1) is PolicyKind.ROV and a.kind_of(2) is PolicyKind.BGP


@pytest.mark.parametrize(
    "kind,rel,accepted",
    [
        (PolicyKind.BGP, P, True),
        (PolicyKind.ROV, P, False),
        (PolicyKind.PEER_ROV, P, True),
        (PolicyKind.PEER_ROV, C, True),
        (PolicyKind.PEER_ROV, R, False),
        (PolicyKind.ASPA, C, False),
        (PolicyKind.AS_CONES, P, False),
        (PolicyKind.ROVPP_V1_LITE, P, False),
        (PolicyKind.ROVPP_V2_LITE, R, False),
        (PolicyKind.ROVPP_V2_IMPROVED_LITE, C, False),
    ],
)
def test_ingress_invalid_origin(kind, rel, accepted):
    hijack = ann([A], rel)
    assert ingress_accept(kind, hijack, rel, reg()) is accepted


def test_aspa_rejects_forged_origin_when_victim_attests():
    r = reg(aspa={V: frozenset({100})})
    forged = ann([A, V], C)
    assert ingress_accept(PolicyKind.ASPA, forged, C, r) is False
    assert ingress_accept(PolicyKind.ROV, forged, C, r) is True
    # without the victim's record the path cannot be judged
    assert ingress_accept(PolicyKind.ASPA, forged, C, reg()) is True


def test_ascones_otc_from_peer_rejected():
    leaked = ann([5, 7, V], R, otc=7)
    assert ingress_accept(PolicyKind.AS_CONES, leaked, R, reg()) is False
    assert ingress_accept(PolicyKind.BGP, leaked, R, reg()) is True


def test_ascones_otc_stamped_by_sending_peer_accepted():
    assert ingress_accept(PolicyKind.AS_CONES, ann([5, V], R, otc=5), R, reg()) is True


def test_ascones_otc_from_customer_rejected_from_provider_accepted():
    assert ingress_accept(PolicyKind.AS_CONES, ann([5, V], C, otc=5), C, reg()) is False
    assert ingress_accept(PolicyKind.AS_CONES, ann([5, V], P, otc=5), P, reg()) is True


def test_ascones_cone_check():
    g = parse_caida("1|2|-1\n2|10|-1\n1|3|-1")
    other = Prefix.parse("9.9.0.0/16")  # no ROA: only the cone check can object
    outside = ann([2, 3], C, prefix=other)  # customer 2 claims a route from 3
    assert ingress_accept(PolicyKind.AS_CONES, outside, C, reg(g)) is False
    assert ingress_accept(PolicyKind.AS_CONES, outside, C, reg(g, cone_check=False)) is True
    assert ingress_accept(PolicyKind.AS_CONES, ann([2, 10], C, prefix=other), C, reg(g)) is True


def test_rib_react_v1_blackholes_invalid_subprefix():
    hij = ann([A], P, prefix=SUBPREFIX)
    hole = rib_react(PolicyKind.ROVPP_V1_LITE, hij, reg())
    assert hole is not None and hole.blackhole and hole.prefix == SUBPREFIX
    assert hole.otc is None and not hole.seeded


def test_rib_react_follows_covering_route():
    hij = ann([7, A], P, prefix=SUBPREFIX)
    same = ann([7, 8, V], P)
    other = ann([9, V], C)
    assert rib_react(PolicyKind.ROVPP_V1_LITE, hij, reg(), same).blackhole
    # the covering route leads elsewhere, so the /16 still reaches the victim
    assert rib_react(PolicyKind.ROVPP_V1_LITE, hij, reg(), other) is None
    assert rib_react(PolicyKind.ROVPP_V2_LITE, hij, reg(), ann([V], seeded=True)) is None


def test_rib_react_rov_does_nothing():
    assert rib_react(PolicyKind.ROV, ann([A], P, prefix=SUBPREFIX), reg()) is None


def test_rib_react_ignores_exact_prefix_hijack():
    assert rib_react(PolicyKind.ROVPP_V1_LITE, ann([A], P), reg()) is None


def test_v1_blackhole_installed_with_covering_route():
    from bgpdeploy.scenarios import ScenarioConfig

    g = parse_caida("1|2|-1\n3|1|0")
    roas = frozenset({ROA(VICTIM_PREFIX, 3, 16)})
    scen = ScenarioConfig(AttackKind.SUBPREFIX_HIJACK, 3, 1, VICTIM_PREFIX, SUBPREFIX, roas, 1)
    ribs = propagate(g, PolicyAssignment(frozenset({2}), PolicyKind.ROVPP_V1_LITE), scen)
    assert ribs[2][SUBPREFIX].blackhole
    assert not ribs[2][VICTIM_PREFIX].blackhole


def test_v1_no_blackhole_when_covering_route_is_clean():
    from bgpdeploy.scenarios import ScenarioConfig

    # 2 hears the hijack from provider 1 but reaches the victim through customer 3
    g = parse_caida("1|2|-1\n2|3|-1\n1|4|-1")
    roas = frozenset({ROA(VICTIM_PREFIX, 3, 16)})
    scen = ScenarioConfig(AttackKind.SUBPREFIX_HIJACK, 3, 4, VICTIM_PREFIX, SUBPREFIX, roas, 1)
    ribs = propagate(g, PolicyAssignment(frozenset({2}), PolicyKind.ROVPP_V1_LITE), scen)
    assert SUBPREFIX not in ribs[2]
    assert ribs[2][VICTIM_PREFIX].as_path == (3,)


def test_v1_blackhole_installed_without_covering_route():
    from oracles import Seeds

    # only the attacker's /24 exists; the victim never announces its /16
    g = parse_caida("1|2|-1")
    only_sub = Seeds([(1, ann([1], prefix=SUBPREFIX, seeded=True))], roas=ROAS)
    ribs = propagate(g, PolicyAssignment(frozenset({2}), PolicyKind.ROVPP_V1_LITE), only_sub)
    assert VICTIM_PREFIX not in ribs[2]
    assert ribs[2][SUBPREFIX].blackhole


def test_egress_ascones_customer_route_up_untouched():
    out = egress_transform(PolicyKind.AS_CONES, 5, ann([7, V], C), P, reg())
    assert out is not None and out.otc is None and out.as_path == (5, 7, V)
    assert out.from_rel is C  # the provider sees us as its customer


def test_egress_ascones_stamps_otc_to_customer_and_peer():
    for to in (C, R):
        out = egress_transform(PolicyKind.AS_CONES, 5, ann([7, V], C), to, reg())
        assert out.otc == 5


def test_egress_ascones_suppresses_marked_route_upward():
    marked = ann([7, V], P, otc=7)
    assert egress_transform(PolicyKind.AS_CONES, 5, marked, P, reg()) is None
    assert egress_transform(PolicyKind.AS_CONES, 5, marked, R, reg()) is None
    assert egress_transform(PolicyKind.AS_CONES, 5, marked, C, reg()).otc == 7


def _hole(rel=C):
    return ann([A], rel, prefix=SUBPREFIX, blackhole=True)


def test_egress_v1_never_exports_blackhole():
    for to in (C, R, P):
        assert egress_transform(PolicyKind.ROVPP_V1_LITE, 5, _hole(), to, reg()) is None


def test_egress_v2_blackhole_to_customers_only():
    out = egress_transform(PolicyKind.ROVPP_V2_LITE, 5, _hole(), C, reg())
    assert out.blackhole and out.prefix == SUBPREFIX and out.as_path == (5, A)
    assert egress_transform(PolicyKind.ROVPP_V2_LITE, 5, _hole(), R, reg()) is None
    assert egress_transform(PolicyKind.ROVPP_V2_LITE, 5, _hole(), P, reg()) is None
    opened = reg(v2_blackhole_to_all=True)
    assert egress_transform(PolicyKind.ROVPP_V2_LITE, 5, _hole(), P, opened).blackhole


def test_egress_v2_improved_follows_export_rule():
    assert egress_transform(PolicyKind.ROVPP_V2_IMPROVED_LITE, 5, _hole(C), P, reg()).blackhole
    assert egress_transform(PolicyKind.ROVPP_V2_IMPROVED_LITE, 5, _hole(P), P, reg()) is None
    assert egress_transform(PolicyKind.ROVPP_V2_IMPROVED_LITE, 5, _hole(P), C, reg()).blackhole


def test_egress_leak_bypasses_export_rule():
    from_provider = ann([7, V], P)
    assert egress_transform(PolicyKind.BGP, 5, from_provider, P, reg()) is None
    out = egress_transform(PolicyKind.BGP, 5, from_provider, P, reg(), leaking=True)
    assert out.as_path == (5, 7, V)


_kinds = st.sampled_from(list(PolicyKind))
_rels = st.sampled_from([C, R, P])


@st.composite
def announcements(draw):
    path = draw(st.lists(st.sampled_from([1, 2, 3, V, A, 100]), min_size=1, max_size=4, unique=True))
    prefix = draw(st.sampled_from([VICTIM_PREFIX, SUBPREFIX, Prefix.parse("9.9.0.0/16")]))
    otc = draw(st.one_of(st.none(), st.sampled_from(path)))
    return ann(path, draw(_rels), prefix=prefix, otc=otc)


@settings(max_examples=300, deadline=None)
@given(_kinds, announcements(), st.booleans())
def test_bgp_is_upper_bound_on_acceptance(kind, a, with_aspa):
    r = reg(aspa={V: frozenset({100}), 2: frozenset({1})} if with_aspa else None)
    if ingress_accept(kind, a, a.from_rel, r):
        assert ingress_accept(PolicyKind.BGP, a, a.from_rel, r)
    if kind in (PolicyKind.ROV, PolicyKind.ASPA, PolicyKind.AS_CONES) or kind in ROVPP_KINDS:
        if r.rov(a) is Validity.INVALID:
            assert not ingress_accept(kind, a, a.from_rel, r)


def _random_run(seed, policy):
    rng = random.Random(seed)
    g = random_small(rng, max_nodes=30)
    try:
        scen = make_scenario(rng.choice(list(AttackKind)), g, rng, g.nodes)
    except ScenarioError:
        return None
    adopters = frozenset(a for a in g.nodes if a != scen.attacker and rng.random() < 0.6)
    assignment = PolicyAssignment(adopters, policy)
    registries = build_registries(g, assignment, scen.roas)
    return g, scen, assignment, registries, propagate(g, assignment, scen, registries)


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 10**9))
def test_ascones_never_sends_marked_route_up_or_across(seed):
    run = _random_run(seed, PolicyKind.AS_CONES)
    if run is None:
        return
    g, scen, assignment, r, ribs = run
    for b in g.nodes:
        for held in ribs[b].values():
            if held.seeded:
                continue
            sender = held.next_hop
            if sender not in assignment.adopters:
                continue
            # held.from_rel is how b sees the sender; CUSTOMER / PEER mean the
            # sender exported upward or across
            if held.from_rel in (C, R):
                assert ribs[sender][held.prefix].otc is None
    for a in assignment.adopters:
        for held in ribs[a].values():
            if held.otc is not None:
                for to in (R, P):
                    assert egress_transform(PolicyKind.AS_CONES, a, held, to, r) is None


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 10**9))
def test_v2_improved_blackhole_never_beats_valid_route(seed):
    run = _random_run(seed, PolicyKind.ROVPP_V2_IMPROVED_LITE)
    if run is None:
        return
    g, scen, assignment, r, ribs = run
    for a in assignment.adopters:
        for prefix, held in ribs[a].items():
            if not held.blackhole:
                continue
            for n, rel in g.neighbors(a):
                offer = ribs[n].get(prefix)
                if offer is None:
                    continue
                out = egress_transform(assignment.kind_of(n), n, offer, rel.inverse, r)
                if out is None or a in out.as_path:
                    continue
                assert not ingress_accept(assignment.kind_of(a), out, out.from_rel, r)


@pytest.mark.parametrize("policy", list(PolicyKind))
def test_empty_adopters_identical_to_bgp(policy):
    for seed in range(40):
        rng = random.Random(seed)
        g = random_small(rng, max_nodes=25)
        try:
            scen = make_scenario(rng.choice(list(AttackKind)), g, rng, g.nodes)
        except ScenarioError:
            continue
        empty = PolicyAssignment(frozenset(), policy)
        base = PolicyAssignment.baseline()
        assert propagate(g, empty, scen) == propagate(g, base, scen)
