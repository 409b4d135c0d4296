"""
End-to-end smoke suite for the TWR beamforming toolkit.
Walks every layer once on a desk-sized scenario and prints a pass/fail summary.
"""
import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))


def print_section(title: str):
    print(f"\n{'='*60}")
    print(f"  {title}")
    print('='*60)


def print_pass(msg: str):
    print(f"  [PASS] {msg}")


def print_fail(msg: str):
    print(f"  [FAIL] {msg}")


def test_config():
    """Test configuration loading."""
    print_section("1. CONFIGURATION")
    try:
        from twr_beamform.config import settings

        assert settings.app_name == "TWR Beamforming"
        print_pass(f"App name: {settings.app_name}")

        assert settings.logs_dir.exists()
        print_pass(f"Logs dir exists: {settings.logs_dir}")

        assert settings.runtime.workers >= 1
        print_pass(f"Sweep workers: {settings.runtime.workers}")

        print_pass(f"Rank threshold: {settings.numerics.rank_threshold}")
        return True
    except Exception as e:
        print_fail(f"Config error: {e}")
        return False


def test_logging():
    """Test logging system."""
    print_section("2. LOGGING")
    try:
        from twr_beamform.utils.logging_config import get_logger, get_trial_logger

        logger = get_logger("test")
        logger.info("Test log message")
        print_pass("Standard logger working")

        trial_logger = get_trial_logger("TestTrial")
        trial_logger.info("Test trial record")
        print_pass("Trial logger working")
        return True
    except Exception as e:
        print_fail(f"Logging error: {e}")
        return False


def test_tensor_core():
    """Test unfoldings and HOSVD."""
    print_section("3. TENSOR CORE")
    try:
        import numpy as np
        from twr_beamform.utils.tensor_core import hosvd, mode_fold, mode_unfold, tucker_reconstruct

        rng = np.random.default_rng(0)
        T = rng.standard_normal((3, 4, 2)) + 1j * rng.standard_normal((3, 4, 2))
        for n in (1, 2, 3):
            assert np.allclose(mode_fold(mode_unfold(T, n), n, T.shape), T)
        print_pass("Unfold/fold identity on all three modes")

        core, U1, U2, U3 = hosvd(T)
        assert np.allclose(tucker_reconstruct(core, U1, U2, U3), T)
        print_pass(f"HOSVD reconstructs the tensor, core shape {core.shape}")
        return True
    except Exception as e:
        print_fail(f"Tensor core error: {e}")
        return False


def test_designers():
    """Test fully-digital, hybrid and terminal designers on one realization."""
    print_section("4. RELAY AND TERMINAL DESIGNERS")
    try:
        import numpy as np
        from twr_beamform.channel.channel_model import generate_channel_set
        from twr_beamform.designers.fd_relay import design_fd_relay
        from twr_beamform.designers.had_relay import had_altmax, had_hosvd, stack_fd_tensor
        from twr_beamform.services.link_eval import design_terminal_beams

        ch = generate_channel_set(np.random.default_rng(1), 16, 4, 4, K=4)
        print_pass(f"Channel set: K={ch.K}, M_rs={ch.M_rs}")

        designs = {m: design_fd_relay(ch, m, Ns=2, R=2) for m in ("anomax", "rr", "err")}
        print_pass(f"FD designs: {', '.join(designs)}")

        Gt = stack_fd_tensor(designs["err"].G)
        for design in (had_hosvd(Gt, 8), had_altmax(Gt, 8)):
            err = design.diagnostics["reconstruction_error"]
            assert 0.0 <= err <= 1.0
            print_pass(f"{design.method}: reconstruction error {err:.3f}")

        beams = design_terminal_beams(ch, designs["rr"].G, 2, 1.0)
        assert beams.F[0][0].shape == (4, 2)
        print_pass("Terminal beams designed for every subcarrier")
        return True
    except Exception as e:
        print_fail(f"Designer error: {e}")
        return False


def test_trial():
    """Test one Monte Carlo trial."""
    print_section("5. MONTE CARLO TRIAL")
    try:
        import numpy as np
        from twr_beamform.models.experiment import ExperimentConfig
        from twr_beamform.services.link_eval import run_trial

        config = ExperimentConfig(m_rs=16, k=4, ns=2, n_rs=8, snr_db_grid=[0.0, 20.0], trials=1)
        outcome = run_trial(config, seed=7)
        for label, row in outcome.items():
            assert all(np.isfinite(row))
            print_pass(f"{label}: SE {row[0]:.3f} -> {row[1]:.3f} bit/s/Hz")
        return True
    except Exception as e:
        print_fail(f"Trial error: {e}")
        return False


def test_sweep_and_csv():
    """Test a preset sweep end to end."""
    print_section("6. SWEEP AND CSV")
    try:
        import tempfile
        from twr_beamform.evaluation.presets import preset_values
        from twr_beamform.evaluation.sweep import emit_csv, parse_config, run_sweep

        config = parse_config(base=preset_values("fig1a"), overrides={"trials": 2, "k": 4, "snr_db_grid": [10.0]})
        results = run_sweep(config, workers=1)
        print_pass(f"Sweep rows: {len(results)}")

        with tempfile.TemporaryDirectory() as tmp:
            path = emit_csv(results, Path(tmp) / "fig1a.csv")
            lines = path.read_text(encoding="utf-8").splitlines()
            assert len(lines) == len(results) + 1
            print_pass(f"CSV header: {lines[0]}")
        return True
    except Exception as e:
        import traceback
        print_fail(f"Sweep error: {e}")
        traceback.print_exc()
        return False


def main():
    """Run all tests."""
    print("\n" + "="*60)
    print("  TWR BEAMFORMING - SMOKE TEST SUITE")
    print("="*60)

    results = {}

    results['config'] = test_config()
    results['logging'] = test_logging()
    results['tensor_core'] = test_tensor_core()
    results['designers'] = test_designers()
    results['trial'] = test_trial()
    results['sweep'] = test_sweep_and_csv()

    # Summary
    print_section("TEST SUMMARY")
    passed = sum(1 for v in results.values() if v)
    total = len(results)

    for name, result in results.items():
        status = "[PASS]" if result else "[FAIL]"
        print(f"  {status}: {name}")

    print(f"\n  {'='*40}")
    print(f"  TOTAL: {passed}/{total} tests passed")
    print(f"  {'='*40}\n")

    return passed == total


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
