from pathlib import Path

import pytest

pytestmark = pytest.mark.e2e


def _study(tmp_path: Path, k_rule: str):
    from hjbflow.app.pipeline import run_eoc
    from hjbflow.schema.config import EocSettings

    settings = EocSettings.model_validate(
        {"model": "dax6", "v-minus": 0.3, "v-plus": 1.5, "k-rule": k_rule}
    )
    assert settings.levels == [0.1, 0.05, 0.025, 0.0125]
    return run_eoc(settings, tmp_path)


def test_first_order_regime(tmp_path: Path):
    result = _study(tmp_path, "0.1*h")
    orders = [r.eoc_linf for r in result.reports[1:]]
    assert all(o is not None and o >= 0.8 for o in orders), result.table()
    assert orders[-1] <= 1.1, result.table()
    # the h^2 part fades with refinement, so the orders fall toward 1
    assert all(b <= a + 1e-3 for a, b in zip(orders, orders[1:])), result.table()

    # e = a h + b h^2 through the two finest levels; the linear part dominates there
    coarse, fine = result.reports[-2], result.reports[-1]
    det = coarse.h * fine.h**2 - fine.h * coarse.h**2
    lin = (coarse.err_linf_l2 * fine.h**2 - fine.err_linf_l2 * coarse.h**2) / det
    quad = (coarse.h * fine.err_linf_l2 - fine.h * coarse.err_linf_l2) / det
    assert lin > 0.0
    assert lin * fine.h >= 10.0 * abs(quad) * fine.h**2, result.table()
    assert all(r.max_iterations <= 100 for r in result.reports)
    assert (tmp_path / "eoc.txt").exists()


def test_second_order_regime(tmp_path: Path):
    result = _study(tmp_path, "10*h^2")
    orders = [r.eoc_linf for r in result.reports[1:]]
    assert all(o is not None and 1.8 <= o <= 2.1 for o in orders), result.table()
