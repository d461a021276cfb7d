"""Strip construction, torus oracle, localization diagnostics, skin summary."""

import cmath
import math

import numpy as np
import pytest

from majorana_nh import (
    Coupling3,
    ModelConfig,
    RibbonSpec,
    Variant,
    bloch_hamiltonian,
    build_ribbon,
    diagonalize_ribbon,
    edge_mode_weights,
    eig,
    k_from_bond_phase,
    localization_profile,
    match_eigenvalue_sets,
    nhse_summary,
    pbc_reference_cloud,
    skin_criterion_any,
    sweep,
)
from majorana_nh.eigen import Spectrum
from majorana_nh.models import effective_couplings
from conftest import random_complex_coupling

E3 = cmath.exp(1j * math.pi / 3)
E6 = cmath.exp(1j * math.pi / 6)


def _variant_zoo(rng):
    return [
        ModelConfig(Variant.PURE_YL, random_complex_coupling(rng)),
        ModelConfig(
            Variant.K_MODEL,
            random_complex_coupling(rng),
            k_coupling=complex(rng.normal(), rng.normal()) * 0.3,
        ),
        ModelConfig(
            Variant.GAMMA_MODEL,
            random_complex_coupling(rng),
            gamma=complex(rng.normal(), rng.normal()) * 0.3,
        ),
        ModelConfig(
            Variant.MAG_MODEL,
            random_complex_coupling(rng),
            d=rng.uniform(-0.6, 0.6),
            b_field=tuple(rng.uniform(-0.8, 0.8, 3)),
        ),
    ]


def torus_union(model, w, kx):
    """Oracle: Bloch eigenvalues at the w quantized transverse momenta."""
    vals = []
    for n in range(w):
        q = 2 * np.pi * n / w
        th = np.array([kx / 2 - q, -kx / 2 - q])
        k = k_from_bond_phase(th)
        vals.extend(np.linalg.eigvals(bloch_hamiltonian(model, k).entries))
    return np.asarray(vals)


class TestBuildRibbon:
    def test_dimension_law(self):
        model = ModelConfig(Variant.PURE_YL, Coupling3(1, 1, 1))
        for w in (2, 5, 52):
            h = build_ribbon(RibbonSpec(w=w, boundary_y="open", k_x=0.3, model=model))
            assert h.shape == (6 * w, 6 * w)

    def test_w_floor(self):
        model = ModelConfig(Variant.PURE_YL, Coupling3(1, 1, 1))
        with pytest.raises(ValueError):
            RibbonSpec(w=1, boundary_y="open", k_x=0.0, model=model)

    def test_antisymmetry_in_kx(self, rng):
        for model in _variant_zoo(rng):
            kx = rng.uniform(-np.pi, np.pi)
            hp = build_ribbon(RibbonSpec(w=6, boundary_y="open", k_x=kx, model=model))
            hm = build_ribbon(RibbonSpec(w=6, boundary_y="open", k_x=-kx, model=model))
            assert np.abs(hp + hm.T).max() < 1e-13

    def test_hermitian_for_real_couplings(self, rng):
        model = ModelConfig(Variant.MAG_MODEL, Coupling3(2, 1, 1.5), d=0.4, b_field=(0.1, 0.3, 0.7))
        kx = rng.uniform(-np.pi, np.pi)
        h = build_ribbon(RibbonSpec(w=8, boundary_y="open", k_x=kx, model=model))
        assert np.abs(h - h.conj().T).max() < 1e-13

    @pytest.mark.parametrize("w", [8, 24])
    def test_torus_oracle_all_variants(self, rng, w):
        for model in _variant_zoo(rng):
            kx = rng.uniform(-np.pi, np.pi)
            h = build_ribbon(RibbonSpec(w=w, boundary_y="periodic", k_x=kx, model=model))
            ribbon_vals = np.linalg.eigvals(h)
            assert match_eigenvalue_sets(ribbon_vals, torus_union(model, w, kx)) < 1e-8

    def test_reductions_to_pure_model(self, rng):
        j = random_complex_coupling(rng)
        kx = rng.uniform(-np.pi, np.pi)
        base = build_ribbon(
            RibbonSpec(w=6, boundary_y="open", k_x=kx, model=ModelConfig(Variant.PURE_YL, j))
        )
        for model in (
            ModelConfig(Variant.K_MODEL, j, k_coupling=0.0),
            ModelConfig(Variant.GAMMA_MODEL, j, gamma=0.0),
            ModelConfig(Variant.MAG_MODEL, j, d=0.0, b_field=(0, 0, 0)),
        ):
            h = build_ribbon(RibbonSpec(w=6, boundary_y="open", k_x=kx, model=model))
            np.testing.assert_array_equal(h, base)

    def test_block_fast_path_matches_generic(self, rng):
        model = ModelConfig(Variant.K_MODEL, Coupling3(2 * E3, E6, 2.5), k_coupling=0.4)
        h = build_ribbon(RibbonSpec(w=10, boundary_y="open", k_x=1.1, model=model))
        fast = diagonalize_ribbon(h)
        full = eig(h)
        assert match_eigenvalue_sets(fast.eigenvalues, full.eigenvalues) < 1e-10
        assert fast.achieved_tol < 1e-10


class TestLocalizationProfile:
    def _delta_spectrum(self, w, site):
        n = 6 * w
        v = np.zeros((n, n), dtype=complex)
        # all weight on one lattice site, any flavour
        for i in range(n):
            v[3 * site, i] = 1.0
        return Spectrum(
            eigenvalues=np.zeros(n, dtype=complex),
            right_vectors=v,
            left_vectors=None,
            residuals=np.zeros(n),
            defective_flags=np.zeros(n, dtype=bool),
            achieved_tol=0.0,
            matrix_norm=1.0,
        )

    def test_delta_state_bottom_edge(self):
        w = 8
        recs = localization_profile(self._delta_spectrum(w, 0), w)
        assert recs[0].mean_row == pytest.approx(1.0)
        assert recs[0].ipr == pytest.approx(1.0)
        assert recs[0].label == "edge_bottom"

    def test_uniform_state_extended(self):
        w = 8
        n = 6 * w
        v = np.full((n, n), 1 / math.sqrt(n), dtype=complex)
        s = Spectrum(np.zeros(n, complex), v, None, np.zeros(n), np.zeros(n, bool), 0.0, 1.0)
        recs = localization_profile(s, w)
        assert recs[0].mean_row == pytest.approx((2 * w + 1) / 2)
        assert recs[0].ipr == pytest.approx(1 / (2 * w))
        assert recs[0].label == "extended"

    def test_double_edge_peaks_not_extended(self):
        w = 8
        n = 6 * w
        v = np.zeros((n, n), dtype=complex)
        v[0, :] = 1 / math.sqrt(2)        # bottom site, flavour x
        v[n - 3, :] = 1 / math.sqrt(2)    # top site, flavour x
        s = Spectrum(np.zeros(n, complex), v, None, np.zeros(n), np.zeros(n, bool), 0.0, 1.0)
        recs = localization_profile(s, w)
        assert recs[0].mean_row == pytest.approx((2 * w + 1) / 2)
        assert recs[0].label != "extended"
        assert recs[0].ipr == pytest.approx(0.5)

    def test_weights_normalized_and_ipr_bounds(self, rng):
        model = ModelConfig(Variant.GAMMA_MODEL, random_complex_coupling(rng), gamma=0.3)
        w = 6
        h = build_ribbon(RibbonSpec(w=w, boundary_y="open", k_x=0.9, model=model))
        s = diagonalize_ribbon(h)
        from majorana_nh.ribbon import site_weights

        ws = site_weights(s, w)
        np.testing.assert_allclose(ws.sum(axis=0), 1.0, atol=1e-12)
        recs = localization_profile(s, w)
        for r in recs:
            assert 1 / (2 * w) - 1e-12 <= r.ipr <= 1 + 1e-12
            assert 1.0 <= r.mean_row <= 2 * w

    def test_dimension_mismatch(self):
        w = 8
        with pytest.raises(ValueError):
            localization_profile(self._delta_spectrum(w, 0), w + 1)


class TestEdgeModeWeights:
    def test_hermitian_zero_modes_decay_from_edges(self):
        # snapshot momentum 2*pi/3 lies inside the flat-band window of this
        # Hermitian parameter set; one zero mode per edge and species
        model = ModelConfig(Variant.K_MODEL, Coupling3(2, 1, 2.5), k_coupling=0.4)
        idx, vals, profiles = edge_mode_weights(model, 24, 2 * np.pi / 3, states=6)
        assert profiles.shape == (6, 48)
        assert np.abs(vals).max() < 0.05  # zero-mode band (finite-width splitting)
        for prof in profiles:
            outer = prof[:5].sum() + prof[-5:].sum()
            assert outer > 0.5
            assert prof.argmax() in (0, 1, 46, 47)

    def test_log01_normalization(self):
        model = ModelConfig(Variant.PURE_YL, Coupling3(1, 1, 1))
        _, _, profiles = edge_mode_weights(model, 12, 2 * np.pi / 3, states=2, normalization="log01")
        assert profiles.min() == pytest.approx(0.0)
        assert profiles.max() == pytest.approx(1.0)
        for prof in profiles:
            assert prof.min() == pytest.approx(0.0) and prof.max() == pytest.approx(1.0)

    def test_log01_two_value_profile(self):
        # affine rescaling sends {1e-8, 1} to {0, 1}
        logs = np.log(np.array([1e-8, 1.0]))
        scaled = (logs - logs.min()) / (logs.max() - logs.min())
        np.testing.assert_allclose(scaled, [0, 1], atol=1e-15)

    def test_linear_sums_to_one(self):
        model = ModelConfig(Variant.GAMMA_MODEL, Coupling3(2, 1, 2.5 * E3), gamma=0.4)
        _, _, profiles = edge_mode_weights(model, 12, np.pi / 3, states=5)
        np.testing.assert_allclose(profiles.sum(axis=1), 1.0, atol=1e-12)

    def test_empty_selection_rejected(self):
        model = ModelConfig(Variant.PURE_YL, Coupling3(1, 1, 1))
        with pytest.raises(ValueError):
            edge_mode_weights(model, 8, 0.5, states=[])
        with pytest.raises(ValueError):
            edge_mode_weights(model, 8, 0.5, states=0)


class TestSweepAndSummary:
    def test_record_counts_and_order(self, rng):
        model = ModelConfig(Variant.K_MODEL, Coupling3(2, 1, 2.5), k_coupling=0.4)
        kxs = np.linspace(-np.pi, np.pi, 6, endpoint=False)
        res = sweep(model, 6, kxs, n_transverse=128)
        assert all(len(recs) == 36 for recs in res.records)
        for recs in res.records:
            assert [r.state_index for r in recs] == list(range(36))

    def test_threads_reproduce_serial(self):
        model = ModelConfig(Variant.GAMMA_MODEL, Coupling3(2, 1, 2.5 * E3), gamma=0.4)
        kxs = np.linspace(-np.pi, np.pi, 4, endpoint=False)
        r1 = sweep(model, 6, kxs, n_transverse=64)
        r2 = sweep(model, 6, kxs, n_transverse=64, threads=3)
        for a_recs, b_recs in zip(r1.records, r2.records):
            for a, b in zip(a_recs, b_recs):
                assert a == b

    def test_empty_grid_rejected(self):
        model = ModelConfig(Variant.PURE_YL, Coupling3(1, 1, 1))
        with pytest.raises(ValueError):
            sweep(model, 6, [])

    def test_hermitian_no_skin(self):
        model = ModelConfig(Variant.K_MODEL, Coupling3(2, 1, 2.5), k_coupling=0.4)
        kxs = np.linspace(-np.pi, np.pi, 8, endpoint=False)
        summ = nhse_summary(sweep(model, 12, kxs, n_transverse=1024))
        assert not summ.nhse_present

    def test_summary_requires_cloud(self):
        model = ModelConfig(Variant.PURE_YL, Coupling3(1, 1, 1))
        res = sweep(model, 6, [0.5], pbc_reference=False)
        with pytest.raises(ValueError):
            nhse_summary(res)

    def test_k_model_skin_consistency_small(self, rng):
        # summary verdict against the phase-asymmetry criterion on clearly
        # non-marginal draws (the statistical version with marginality logging
        # is an acceptance criterion)
        for _ in range(12):
            kind = rng.integers(0, 3)
            mods = rng.uniform(0.6, 2.0, 3)
            if kind == 0:
                j = Coupling3(*mods)
            elif kind == 1:
                j = Coupling3(mods[0], mods[1], mods[2] * np.exp(1j * rng.uniform(0.3, 3)))
            else:
                # keep the x-y phase difference well away from 0 and pi
                j = Coupling3(
                    mods[0] * np.exp(1j * rng.uniform(0.4, 1.2)),
                    mods[1] * np.exp(-1j * rng.uniform(0.4, 1.2)),
                    mods[2],
                )
            model = ModelConfig(Variant.K_MODEL, j, k_coupling=0.4)
            theory = any(
                skin_criterion_any(j_eff) for j_eff in effective_couplings(j, 0.4)
            )
            kxs = np.linspace(-np.pi, np.pi, 4, endpoint=False)
            summ = nhse_summary(sweep(model, 12, kxs, n_transverse=1024))
            assert summ.nhse_present == theory

    def test_flip_detection_field_dmi_model(self):
        model = ModelConfig(
            Variant.MAG_MODEL, Coupling3(E3, E6, 1), d=0.5, b_field=(0, 0, 0.7)
        )
        kxs = np.linspace(-np.pi, np.pi, 12, endpoint=False)
        summ = nhse_summary(sweep(model, 16, kxs, n_transverse=1024))
        assert summ.nhse_present
        spacing = 2 * np.pi / 12
        targets = [0.0, np.pi]
        assert len(summ.flip_kx) >= 2
        for t in targets:
            d = min(
                min(abs(f - t), 2 * np.pi - abs(f - t)) for f in summ.flip_kx
            )
            assert d <= spacing

    def test_cloud_methods_agree(self, rng):
        model = ModelConfig(Variant.K_MODEL, Coupling3(2, 1, 2.5 * E3), k_coupling=0.4)
        kx = rng.uniform(-np.pi, np.pi)
        c1 = pbc_reference_cloud(model, kx, 64, method="closed_form")
        c2 = pbc_reference_cloud(model, kx, 64, method="eig")
        assert match_eigenvalue_sets(c1, c2) < 1e-9
