"""Coupling laws, site profiles, model assembly, and the two structural verifiers."""

from __future__ import annotations

import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wegner_lab.grids import BoxSpec
from wegner_lab.random_model import (
    AlloyModel,
    BallIndicator,
    BernoulliAt,
    CantorTranslate,
    ConstructionError,
    CoverageError,
    ModelConfigError,
    ModelError,
    SingleSite,
    TruncatedPowerHolder,
    Uniform,
    construct_diluted_minorant,
    covering_model,
    empirical_modulus,
    fat_cantor_model,
    geometric_dilution_model,
    load_model_config,
    mean_potential,
    modulus_s,
    potential_envelope,
    sample_couplings,
    sample_iid,
    sample_potential,
    sample_value,
    sample_value_below,
    slab_model,
    verify_NoPi,
    verify_Pi,
)
from wegner_lab.thick_sets import interval_member

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def _box(d=1, L=4.0, n=63, center=None):
    return BoxSpec(d=d, length=L, center=center or (0.0,) * d, n=n)


class TestDistributions:
    def test_uniform_basics(self):
        u = Uniform(1.0, 3.0)
        assert (u.min_support, u.max_support, u.mean) == (1.0, 3.0, 2.0)
        assert u.interval_mass(0.0, 2.0) == pytest.approx(0.5)
        assert u.interval_mass(5.0, 6.0) == 0.0
        assert u.modulus_closed(1.0) == pytest.approx(0.5)
        assert u.modulus_closed(9.0) == 1.0

    def test_uniform_validation(self):
        with pytest.raises(ModelError):
            Uniform(1.0, 1.0)
        with pytest.raises(ModelError):
            Uniform(0.0, math.inf)

    def test_bernoulli_basics(self):
        b = BernoulliAt(0.0, 1.0, 0.3)
        assert b.mean == pytest.approx(0.7)
        assert b.interval_mass(-0.5, 0.5) == pytest.approx(0.3)
        assert b.interval_mass(-0.5, 1.5) == 1.0
        assert b.modulus_closed(0.5) == pytest.approx(0.7)
        assert b.modulus_closed(1.0) == 1.0
        assert b.holder_exponent is None

    def test_bernoulli_validation(self):
        with pytest.raises(ModelError):
            BernoulliAt(0.0, 1.0, 0.0)
        with pytest.raises(ModelError):
            BernoulliAt(2.0, 2.0, 0.5)

    def test_power_law_cdf_identities(self):
        t = TruncatedPowerHolder(2.0, 0.5)
        assert t.max_support == 2.0
        assert t.mean == pytest.approx(2.0 / 3.0)
        assert t.interval_mass(0.0, 2.0) == 1.0
        assert t.interval_mass(0.0, 0.5) == pytest.approx(0.5)  # (1/4)^(1/2)
        assert t.holder_exponent == 0.5

    def test_power_law_validation(self):
        with pytest.raises(ModelError):
            TruncatedPowerHolder(0.0, 0.5)
        with pytest.raises(ModelError):
            TruncatedPowerHolder(1.0, -1.0)

    @given(eps=st.floats(1e-6, 4.0), eps2=st.floats(1e-6, 4.0))
    @settings(max_examples=60, deadline=None)
    def test_modulus_monotone_in_window(self, eps, eps2):
        lo, hi = sorted((eps, eps2))
        dists = [Uniform(0.0, 1.0), BernoulliAt(0.0, 1.0, 0.3), TruncatedPowerHolder(1.0, 0.5)]
        assert modulus_s(dists, lo) <= modulus_s(dists, hi) + 1e-12

    def test_modulus_worst_site_wins(self):
        dists = [Uniform(0.0, 1.0), Uniform(0.0, 4.0)]
        assert modulus_s(dists, 0.4) == pytest.approx(0.4)

    def test_modulus_power_law_left_endpoint(self):
        # density falls on (0, m]: the heaviest window hugs the left endpoint,
        # where the endpoint anchor makes the grid scan exact
        t = TruncatedPowerHolder(1.0, 0.5)
        assert modulus_s([t], 0.04) == pytest.approx(0.2, abs=1e-12)

    def test_modulus_power_law_right_endpoint(self):
        t = TruncatedPowerHolder(1.0, 2.0)
        want = 1.0 - 0.9**2
        assert modulus_s([t], 0.1) == pytest.approx(want, abs=1e-12)

    def test_modulus_nonpositive_window(self):
        assert modulus_s([Uniform(0.0, 1.0)], 0.0) == 0.0
        assert modulus_s([Uniform(0.0, 1.0)], -1.0) == 0.0


class TestSampling:
    def test_site_streams_reproducible(self):
        d = Uniform(0.0, 1.0)
        assert sample_value(d, 7, 3) == sample_value(d, 7, 3)
        assert sample_value(d, 7, 3) != sample_value(d, 7, 4)
        assert sample_value(d, 7, 3) != sample_value(d, 8, 3)

    def test_replica_keys_are_distinct_streams(self):
        d = Uniform(0.0, 1.0)
        assert sample_value(d, (7, 0), 3) != sample_value(d, (7, 1), 3)

    @given(
        cap=st.floats(0.05, 1.0),
        seedling=st.integers(0, 2**20),
        site=st.integers(0, 50),
    )
    @settings(max_examples=60, deadline=None)
    def test_conditioned_draw_coupled_below(self, cap, seedling, site):
        d = Uniform(0.0, 1.0)
        full = sample_value(d, seedling, site)
        below = sample_value_below(d, seedling, site, cap)
        assert below <= cap + 1e-15
        assert below <= full + 1e-15  # one shared uniform makes the coupling monotone

    def test_conditioning_below_support_refused(self):
        with pytest.raises(ModelError):
            sample_value_below(Uniform(0.5, 1.0), 0, 0, 0.2)
        with pytest.raises(ModelError):
            sample_value_below(BernoulliAt(1.0, 2.0, 0.5), 0, 0, 0.5)

    def test_bernoulli_conditioning_keeps_low_atom(self):
        b = BernoulliAt(0.0, 1.0, 0.3)
        vals = {sample_value_below(b, s, 0, 0.5) for s in range(20)}
        assert vals == {0.0}

    def test_iid_moments(self):
        x = sample_iid(Uniform(0.0, 1.0), 1, 200_000)
        assert x.mean() == pytest.approx(0.5, abs=0.005)
        y = sample_iid(BernoulliAt(0.0, 1.0, 0.3), 1, 200_000)
        assert y.mean() == pytest.approx(0.7, abs=0.005)

    def test_empirical_modulus_validates(self):
        with pytest.raises(ModelError):
            empirical_modulus(Uniform(0.0, 1.0), 0.0, 100, 0)

    def test_empirical_modulus_tracks_closed_form(self):
        p, se, _ = empirical_modulus(Uniform(0.0, 1.0), 0.5, 40_000, 3)
        assert abs(p - 0.5) <= 5 * se


class TestProfiles:
    def test_ball_half_open_in_one_dimension(self):
        prof = BallIndicator(radius=0.5)
        pts = np.array([[-0.5], [0.0], [0.4999], [0.5]])
        assert prof.evaluate(pts, (0.0,)).tolist() == [1.0, 1.0, 1.0, 0.0]

    def test_ball_open_in_two_dimensions(self):
        prof = BallIndicator(radius=1.0)
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.7, 0.7], [0.71, 0.71]])
        assert prof.evaluate(pts, (0.0, 0.0)).tolist() == [1.0, 0.0, 1.0, 0.0]

    def test_unit_balls_tile_the_line(self):
        prof = BallIndicator(radius=0.5)
        pts = np.linspace(-3, 3, 601).reshape(-1, 1)
        total = sum(prof.evaluate(pts, (float(c),)) for c in range(-4, 5))
        assert np.all(total == 1.0)

    def test_cantor_translate_matches_exact_intervals(self):
        prof = CantorTranslate.from_depth(2)
        y = np.linspace(0.0, 1.0, 257)
        got = prof.evaluate((y + 2.5).reshape(-1, 1), (3.0,))
        want = interval_member(y, prof.intervals).astype(float)
        assert np.array_equal(got, want)

    def test_cantor_translate_vanishes_off_cell(self):
        prof = CantorTranslate.from_depth(2)
        pts = np.array([[-0.6], [0.6]])
        assert prof.evaluate(pts, (0.0,)).tolist() == [0.0, 0.0]

    def test_cantor_translate_one_dimensional_only(self):
        prof = CantorTranslate.from_depth(2)
        with pytest.raises(ModelError):
            prof.evaluate(np.zeros((1, 2)), (0.0, 0.0))


class TestAlloyModel:
    def test_model_validation(self):
        prof = BallIndicator(radius=0.5)
        site = SingleSite(center=(0.0,), radius=0.5, profile=prof)
        with pytest.raises(ModelError):
            AlloyModel(d=1, sites=(), dists=(), extent=4.0)
        with pytest.raises(ModelError):
            AlloyModel(d=1, sites=(site,), dists=(), extent=4.0)
        with pytest.raises(ModelError):
            AlloyModel(d=2, sites=(site,), dists=(Uniform(0, 1),), extent=4.0)

    def test_covering_envelope_exactly_one(self, covering):
        env = potential_envelope(covering)
        assert float(env.values.min()) == 1.0
        assert float(env.values.max()) == 1.0

    def test_sites_near_box(self, covering):
        box = _box(L=4.0)
        near = covering.sites_near_box(box)
        # centers within 2 + 0.5 of origin
        assert [covering.sites[i].center[0] for i in near] == [-2.0, -1.0, 0.0, 1.0, 2.0]

    def test_box_outside_registration_refused(self, covering):
        with pytest.raises(CoverageError):
            sample_potential(covering, 0, _box(L=4.0, center=(39.0,)))
        with pytest.raises(ModelError):
            covering.check_box_registered(BoxSpec(d=2, length=2.0, center=(0.0, 0.0), n=8))

    def test_override_seams(self, covering):
        box = _box()
        assert np.all(sample_potential(covering, 0, box, couplings_override=0.0) == 0.0)
        assert np.all(sample_potential(covering, 0, box, couplings_override=1.0) == 1.0)

    def test_sample_bounded_by_envelope(self, covering):
        box = _box()
        v = sample_potential(covering, 5, box)
        assert np.all(v >= 0.0)
        assert np.all(v <= covering.m_plus + 1e-12)

    def test_conditioning_cap_bounds_field(self, covering):
        box = _box()
        v = sample_potential(covering, 5, box, conditioning_cap=0.1)
        assert np.all(v <= 0.1 + 1e-12)

    def test_mean_potential_covering(self, covering):
        assert np.allclose(mean_potential(covering, _box()), 0.5)

    def test_sample_couplings_matches_sitewise(self, covering):
        cs = sample_couplings(covering, 9)
        assert cs[3] == sample_value(covering.dists[3], 9, 3)

    def test_same_draw_on_overlapping_boxes(self, covering):
        # the same site must contribute the same coupling whatever box asks
        a = sample_potential(covering, 11, _box(L=4.0, center=(0.0,)))
        b = sample_potential(covering, 11, _box(L=4.0, center=(1.0,)))
        nodes_a = _box(L=4.0, center=(0.0,)).axis_nodes(0)
        nodes_b = _box(L=4.0, center=(1.0,)).axis_nodes(0)
        common_a = (nodes_a >= 0.5) & (nodes_a < 1.5)
        common_b = (nodes_b >= 0.5) & (nodes_b < 1.5)
        assert np.allclose(a[common_a], b[common_b])


class TestVerifiers:
    def test_covering_claim_certifies(self, covering):
        cert = verify_Pi(covering)
        assert cert.passed
        assert cert.gamma_star == 1.0
        assert cert.thickness_error == 0.0
        assert cert.first_violation is None

    def test_cantor_claim_certifies(self, cantor):
        cert = verify_Pi(cantor)
        assert cert.passed
        assert cert.gamma_claimed == 17 / 32
        assert cert.gamma_star >= 17 / 32

    def test_pi_requires_claims(self, geometric):
        with pytest.raises(ModelError):
            verify_Pi(geometric)

    def test_pi_detects_violation(self):
        # claim full thickness but leave every second integer site out
        base = covering_model(extent=8.0)
        sites = base.sites[::2]
        broken = AlloyModel(
            d=1,
            sites=sites,
            dists=base.dists[: len(sites)],
            extent=8.0,
            claimed_gamma=1.0,
            claimed_window=base.claimed_window,
            claimed_set=base.claimed_set,
        )
        cert = verify_Pi(broken)
        assert not cert.passed
        assert cert.first_violation is not None

    def test_geometric_refutation(self, geometric):
        cert = verify_NoPi(geometric, kappa_list=[0.5], a_list=[(8.0,)])
        assert cert.passed
        assert cert.sup_u == 1.0
        assert len(cert.witnesses) == 1
        (spot,) = cert.witnesses.values()
        # the witness window really is empty: no site center within reach
        lo = spot[0]
        centers = [s.center[0] for s in geometric.sites]
        assert all(c + 0.5 <= lo or c - 0.5 >= lo + 8.0 for c in centers)

    def test_nopi_requires_bound(self, covering):
        with pytest.raises(ModelError):
            verify_NoPi(covering, [0.5], [(4.0,)])

    def test_covering_support_defeats_nopi(self):
        m = covering_model(extent=8.0)
        claimed = AlloyModel(
            d=1,
            sites=m.sites,
            dists=m.dists,
            extent=m.extent,
            claimed_bound=1.0,
        )
        cert = verify_NoPi(claimed, kappa_list=[0.5], a_list=[(2.0,)])
        assert not cert.passed
        assert cert.missing


class TestDilutedMinorant:
    def test_covering_construction_pinned(self, covering):
        dm = construct_diluted_minorant(covering, 4.0)
        assert dm.spacing == 5.0
        assert dm.lattice_count == 5
        assert dm.weight == pytest.approx(0.2)
        assert dm.gamma_hat == pytest.approx(0.2)
        assert dm.threshold == pytest.approx(1e-6)
        assert dm.s_at_threshold == pytest.approx(1e-6)
        assert dm.margin == pytest.approx(2e-7)
        assert len(dm.cells) == 15
        for cell in dm.cells:
            assert cell.kept.measure == pytest.approx(0.1875)

    def test_cantor_construction(self, cantor):
        dm = construct_diluted_minorant(cantor, 4.0)
        assert dm.gamma_hat == pytest.approx(17 / 32 / 5)
        cell_vol = dm.cells[0].kept.geometry.cell_volume
        for cell in dm.cells:
            assert abs(cell.kept.measure - dm.gamma_hat) <= cell_vol

    def test_minorant_below_field_pathwise(self, covering):
        dm = construct_diluted_minorant(covering, 4.0)
        box = _box(L=8.0, n=127)
        for r in range(30):
            v = sample_potential(covering, (13, r), box)
            w = dm.sample_on(covering, box, (13, r))
            assert np.all(w <= v + 1e-12)

    def test_construction_preconditions(self, geometric):
        with pytest.raises(ConstructionError):
            construct_diluted_minorant(geometric, 4.0)  # no thickness claim
        shifted = covering_model(dist=Uniform(0.5, 1.0))
        with pytest.raises(ConstructionError):
            construct_diluted_minorant(shifted, 4.0)  # support detached from zero

    def test_resolution_too_coarse(self, covering):
        with pytest.raises(ConstructionError):
            construct_diluted_minorant(covering, 4.0, raster_resolution=2)

    def test_atom_at_single_point_refused(self):
        m = covering_model(dist=BernoulliAt(0.0, 1.0, 0.3))
        dm = construct_diluted_minorant(m, 4.0)
        # two atoms are fine; the threshold must sit between them
        assert 0.0 < dm.threshold < 1.0
        assert dm.s_at_threshold == pytest.approx(0.7)


class TestFactoriesAndConfig:
    def test_factory_shapes(self, covering, cantor, geometric, slab):
        assert len(covering.sites) == 81
        assert covering.m_plus == 1.0
        assert len(geometric.sites) == 16  # +-1, 2, 4, ..., 128
        assert slab.d == 2
        assert slab.claimed_bound == 2.0
        assert cantor.claimed_gamma == pytest.approx(float(Fraction(17, 32)))

    def test_slab_envelope_two_deep(self, slab):
        env = potential_envelope(slab)
        assert float(env.values.max()) == 2.0

    @pytest.mark.parametrize(
        "name",
        ["covering.model.ini", "fat_cantor.model.ini", "geometric.model.ini", "slab.model.ini"],
    )
    def test_shipped_configs_load(self, name):
        model = load_model_config(CONFIG_DIR / name)
        assert model.d in (1, 2)
        assert model.sites

    def test_config_matches_factory(self, covering):
        loaded = load_model_config(CONFIG_DIR / "covering.model.ini")
        box = _box()
        assert np.array_equal(
            sample_potential(loaded, 3, box), sample_potential(covering, 3, box)
        )
        assert verify_Pi(loaded).passed

    def test_unknown_key_rejected(self, tmp_path):
        bad = tmp_path / "bad.model.ini"
        bad.write_text("[model]\ndimension = 1\nextent = 4\nbogus = 1\n")
        with pytest.raises(ModelConfigError, match="bogus"):
            load_model_config(bad)

    def test_unknown_section_rejected(self, tmp_path):
        bad = tmp_path / "bad2.model.ini"
        bad.write_text("[model]\ndimension = 1\n[extras]\nx = 1\n")
        with pytest.raises(ModelConfigError, match="extras"):
            load_model_config(bad)

    def test_missing_sections_rejected(self, tmp_path):
        bad = tmp_path / "bad3.model.ini"
        bad.write_text("[model]\ndimension = 1\n")
        with pytest.raises(ModelConfigError):
            load_model_config(bad)

    def test_unknown_distribution_rejected(self, tmp_path):
        bad = tmp_path / "bad4.model.ini"
        bad.write_text(
            "[model]\ndimension = 1\nextent = 4\n"
            "[sites]\nplacement = all-integers\n"
            "[distribution]\nkind = cauchy\n"
        )
        with pytest.raises(ModelConfigError, match="cauchy"):
            load_model_config(bad)
