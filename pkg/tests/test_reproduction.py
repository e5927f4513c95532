"""Desk-scale reproduction of the interoccurrence laws.

Runs the reference parameter set for 2 x 10^4 trading days (2 x 10^10 spin
drawings). Expect tens of minutes on one core; select with ``pytest -m slow``.
"""

from pytest import approx, mark

from threshold_market.config import load_config
from threshold_market.experiment import run_experiment


@mark.slow
class TestReferenceRun:
    """Checks on one full run with the default configuration."""

    def test_laws(self, work_dir):
        """q grows logarithmically with R_Q and beta levels off near 0.2."""
        config = load_config(
            None, {"output.dir": str(work_dir / "reference"), "output.write_rounds": "false"}
        )
        bundle = run_experiment(config)
        fits = {item.target_rq: item.fit for item in bundle.results}
        assert all(fit is not None for fit in fits.values())

        assert bundle.q_law.slope == approx(0.17, abs=0.05)
        assert bundle.q_law.intercept == approx(1.0, abs=0.1)
        for target in (30.0, 70.0):
            assert fits[target].beta_scale == approx(0.20, abs=0.10)
        assert fits[2.0].beta_scale > fits[30.0].beta_scale
        assert all(fit.rms_log_residual < 0.5 for fit in fits.values())
