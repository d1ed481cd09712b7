"""Run configuration and the decompose / select / backtest / tables workflows."""
from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .backtest import AssetRun, SampleSplit, combine, perf_metrics, run_asset
from .core import DataMatrix, Hyperparams, derive_x, mse, postprocess
from .gibbs import FIXED, GBT, IID, ChainConfig, autocorrelation, run_chain, top_m_select
from .importance import rankic_importance, squash, uniform_importance
from .metrics import PAPER, mean_pairwise_correlation, returns
from .rid import RidConfig, randomized_id

RANDOMIZED = "randomized"
RANKIC = "rankic"
SELECT_MODES = (GBT, IID, RANDOMIZED, RANKIC)
TABLE3_MODES = (RANKIC, RANDOMIZED, GBT, IID)
OUTPUT_ENV = "BAYESID_OUTPUT_DIR"
CORRELATION_DEFINITION = "mean absolute pairwise Pearson correlation of the selected in-sample alpha rows"


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_ENV, "runs")


@dataclass
class RunConfig:
    mode: str = GBT
    K: int = 10
    iterations: int = 1000
    burn_in: int = 100
    thinning: int = 5
    seed: int = 0
    M: int = 10
    h: int = 1
    importance_source: str = RANKIC
    importance_scale: float = 1.0
    return_convention: str = PAPER
    swap_move: str = FIXED
    swaps_per_sweep: int = 1
    lower: float = -1.0
    upper: float = 1.0
    d_in: int | None = None
    oversampling: int = 10
    power_iterations: int = 1
    alphas: list[str] = field(default_factory=list)
    prices: list[str] = field(default_factory=list)
    output_dir: str = field(default_factory=default_output_dir)
    jobs: int = 1

    def __post_init__(self):
        if self.mode not in SELECT_MODES:
            raise ValueError(f"mode must be one of {SELECT_MODES}, got {self.mode!r}")
        if self.M < 1 or self.h < 1 or self.jobs < 1:
            raise ValueError("M, h and jobs must be positive")
        if self.prices and len(self.prices) != len(self.alphas):
            raise ValueError("give one prices file per alpha matrix")
        # validates K, iterations, burn-in, thinning and the swap settings
        self.chain_config(self.mode if self.mode in (GBT, IID) else GBT)
        self.hyperparams()
        for p in [*self.alphas, *self.prices]:
            if not Path(p).is_file():
                raise FileNotFoundError(f"input file not found: {p}")
        src = self.importance_source
        if src not in (RANKIC, "uniform") and not Path(src).is_file():
            raise FileNotFoundError(f"importance file not found: {src}")

    def chain_config(self, mode: str, seed_offset: int = 0) -> ChainConfig:
        return ChainConfig(
            K=self.K,
            iterations=self.iterations,
            burn_in=self.burn_in,
            thinning=self.thinning,
            seed=self.seed + seed_offset,
            mode=mode,
            swaps_per_sweep=self.swaps_per_sweep,
            swap_move=self.swap_move,
        )

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(a=self.lower, b=self.upper)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class AssetData:
    name: str
    alphas: DataMatrix
    ret: np.ndarray | None = None

    @property
    def D(self) -> int:
        return self.alphas.shape[1]


def align_returns(alphas: DataMatrix, prices, convention: str = PAPER) -> np.ndarray:
    """Return on each alpha date; each date needs a preceding close."""
    ret = returns(prices, convention)
    by_date = dict(zip(prices.dates[1:], ret))
    missing = [d for d in alphas.col_labels if d not in by_date]
    if missing:
        raise ValueError(f"no return for alpha date {missing[0]!r} (needs that close and the one before)")
    return np.array([by_date[d] for d in alphas.col_labels])


def load_assets(cfg: RunConfig) -> list[AssetData]:
    if not cfg.alphas:
        raise ValueError("at least one alpha matrix is required")
    out = []
    for k, path in enumerate(cfg.alphas):
        A = io.load_alpha_matrix(path)
        ret = None
        if cfg.prices:
            ret = align_returns(A, io.load_prices(cfg.prices[k]), cfg.return_convention)
        name = Path(path).stem.removesuffix("_alphas")
        out.append(AssetData(name, A, ret))
    return out


def in_sample_days(cfg: RunConfig, asset: AssetData) -> int:
    return asset.D if cfg.d_in is None else cfg.d_in


def raw_rankic(cfg: RunConfig, asset: AssetData) -> np.ndarray:
    if asset.ret is None:
        raise ValueError(f"{asset.name}: RankIC needs a prices file")
    d = in_sample_days(cfg, asset)
    return rankic_importance(asset.alphas.values[:, :d], asset.ret[:d], cfg.h)


def importance_for(cfg: RunConfig, asset: AssetData) -> np.ndarray:
    n = asset.alphas.shape[0]
    src = cfg.importance_source
    if src == "uniform":
        return uniform_importance(n)
    raw = raw_rankic(cfg, asset) if src == RANKIC else io.load_importance(src)
    if raw.shape != (n,):
        raise ValueError(f"{asset.name}: importance has {raw.size} entries for {n} alphas")
    return squash(raw, cfg.importance_scale)


def chain_for(cfg: RunConfig, asset: AssetData, mode: str, seed_offset: int = 0):
    """Run the sampler on the in-sample days x alphas matrix of one asset."""
    d = in_sample_days(cfg, asset)
    A = asset.alphas.values[:, :d].T.copy()
    imp = importance_for(cfg, asset) if mode == IID else None
    return A, run_chain(A, cfg.chain_config(mode, seed_offset), cfg.hyperparams(), imp)


def select_indices(cfg: RunConfig, asset: AssetData, mode: str, seed_offset: int = 0) -> tuple[np.ndarray, dict]:
    """Top-M alphas under ``mode``; sorted ascending for a stable column order."""
    n = asset.alphas.shape[0]
    if cfg.M > n:
        raise ValueError(f"cannot select M={cfg.M} of {n} alphas")
    extra: dict = {}
    if mode == RANKIC:
        scores = raw_rankic(cfg, asset)
        idx = top_m_select(scores, cfg.M)
    elif mode == RANDOMIZED:
        d = in_sample_days(cfg, asset)
        A = asset.alphas.values[:, :d].T
        res = randomized_id(
            A, cfg.M, cfg.seed + seed_offset, RidConfig(cfg.oversampling, cfg.power_iterations)
        )
        idx, scores = res.basis_indices, None
        extra = {"reconstruction_mse": res.reconstruction_mse, "weak_pivots": res.weak_pivots}
    else:
        _, trace = chain_for(cfg, asset, mode, seed_offset)
        scores = trace.selection_scores
        idx = top_m_select(scores, cfg.M)
        extra = {"min_mse": trace.min_loss(), "mean_mse": trace.mean_loss()}
    extra["scores"] = scores
    return np.sort(idx), extra


def selection_diagnostics(cfg: RunConfig, asset: AssetData, idx: np.ndarray) -> dict:
    d = in_sample_days(cfg, asset)
    rows = asset.alphas.values[idx, :d]
    out = {
        "mean_correlation": mean_pairwise_correlation(rows) if idx.size > 1 else float("nan"),
        "correlation_definition": CORRELATION_DEFINITION,
    }
    if asset.ret is not None:
        out["mean_rankic"] = float(np.mean(raw_rankic(cfg, asset)[idx]))
    return out


# ---------------------------------------------------------------- commands


def decompose(cfg: RunConfig) -> dict:
    """Sample each asset's alpha matrix and write trace, curves and the refit."""
    if cfg.mode not in (GBT, IID):
        raise ValueError("decompose runs the sampler; mode must be gbt or iid")
    assets = load_assets(cfg)
    out_dir = Path(cfg.output_dir)
    conf = cfg.as_dict()
    summary = {}
    for k, asset in enumerate(assets):
        A, trace = chain_for(cfg, asset, cfg.mode, k)
        st = trace.final_state
        pre = mse(A, derive_x(A, st.r), st.Y)
        dec = postprocess(A, st.r)
        max_lag = min(50, max(trace.retained_y.shape[0] - 1, 0))
        acf = autocorrelation(trace.retained_y, max_lag) if max_lag > 0 else np.ones(1)
        stem = out_dir / f"{asset.name}_{cfg.mode}"
        io.write_json(
            f"{stem}_trace.json",
            {
                "losses": trace.losses,
                "retained_iterations": trace.retained_iterations,
                "retained_sigma2": trace.retained_sigma2,
                "selection_scores": trace.selection_scores,
                "accepted_swaps": trace.accepted_swaps,
                "min_mse": trace.min_loss(),
                "mean_mse": trace.mean_loss(),
            },
            conf,
        )
        io.write_csv(f"{stem}_loss.csv", ["iteration", "mse"], enumerate(trace.losses, start=1), conf)
        io.write_csv(f"{stem}_autocorr.csv", ["lag", "coefficient"], enumerate(acf), conf)
        labels = asset.alphas.row_labels or []
        io.write_json(
            f"{stem}_decomposition.json",
            {
                "basis_indices": dec.basis_indices,
                "basis_labels": [labels[j] for j in dec.basis_indices] if labels else [],
                "W": dec.W,
                "mse_before_postprocess": pre,
                "mse_after_postprocess": dec.mse,
                "rank_deficient": dec.rank_deficient,
                "n_large_weights": dec.n_large_weights,
            },
            conf,
        )
        summary[asset.name] = {"min": trace.min_loss(), "mean": trace.mean_loss()}
    return summary


def select(cfg: RunConfig) -> dict:
    assets = load_assets(cfg)
    conf = cfg.as_dict()
    result = {}
    for k, asset in enumerate(assets):
        idx, extra = select_indices(cfg, asset, cfg.mode, k)
        labels = asset.alphas.row_labels or []
        payload = {
            "mode": cfg.mode,
            "selected": idx,
            "selected_labels": [labels[j] for j in idx] if labels else [],
            **selection_diagnostics(cfg, asset, idx),
            **extra,
        }
        io.write_json(Path(cfg.output_dir) / f"{asset.name}_{cfg.mode}_selection.json", payload, conf)
        result[asset.name] = payload
    return result


def _asset_task(args):
    cfg, asset, mode, k = args
    idx, extra = select_indices(cfg, asset, mode, k)
    s = SampleSplit(in_sample_days(cfg, asset), asset.D)
    run = run_asset(asset.name, asset.alphas.values, asset.ret, s, idx, cfg.h)
    run.meta = {**selection_diagnostics(cfg, asset, idx), **{k2: v for k2, v in extra.items() if k2 != "scores"}}
    return run


def run_backtest(cfg: RunConfig, assets: list[AssetData], mode: str) -> list[AssetRun]:
    if cfg.d_in is None:
        raise ValueError("backtest needs --d-in to split in-sample and out-of-sample days")
    for a in assets:
        if a.ret is None:
            raise ValueError(f"{a.name}: backtest needs a prices file")
        SampleSplit(cfg.d_in, a.D)
    tasks = [(cfg, a, mode, k) for k, a in enumerate(assets)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(_asset_task, tasks))
    return [_asset_task(t) for t in tasks]


def _period_report(runs: list[AssetRun], period: str) -> tuple[dict, np.ndarray]:
    series = combine(runs, period)
    m = perf_metrics(series)
    return dataclasses.asdict(m), series.values


def backtest(cfg: RunConfig) -> dict:
    assets = load_assets(cfg)
    runs = run_backtest(cfg, assets, cfg.mode)
    conf = cfg.as_dict()
    out_dir = Path(cfg.output_dir)
    report = {
        "mode": cfg.mode,
        "aggregation": "per-asset long/flat signals, equal weight across long assets",
        "assets": {
            r.name: {"selected": r.selected, "fits": [dataclasses.asdict(f) for f in r.fits], **r.meta}
            for r in runs
        },
    }
    for period in ("is", "os"):
        metrics, values = _period_report(runs, period)
        report[period] = metrics
        io.write_csv(
            out_dir / f"backtest_{cfg.mode}_{period}_values.csv", ["day", "value"], enumerate(values), conf
        )
    io.write_json(out_dir / f"backtest_{cfg.mode}_report.json", report, conf)
    return report


TABLE3_ROWS = (
    ("Mean RankIC", "mean_rankic"),
    ("Mean Correlation", "mean_correlation"),
    ("Sharpe Ratio (OS)", "os_sharpe"),
    ("Sharpe Ratio (IS)", "is_sharpe"),
    ("Annual Return (OS)", "os_annual_return"),
    ("Annual Return (IS)", "is_annual_return"),
    ("Max Drawdown (OS)", "os_max_drawdown"),
    ("Max Drawdown (IS)", "is_max_drawdown"),
)


def tables(cfg: RunConfig) -> dict:
    """Two summary tables: GBT/IID min and mean MSE per asset, and per
    selection mode the selection diagnostics plus IS and OS performance."""
    assets = load_assets(cfg)
    conf = cfg.as_dict()
    out_dir = Path(cfg.output_dir)

    table2 = {}
    for k, asset in enumerate(assets):
        for mode in (GBT, IID):
            _, trace = chain_for(cfg, asset, mode, k)
            table2.setdefault(f"{mode.upper()} Min", {})[asset.name] = trace.min_loss()
            table2.setdefault(f"{mode.upper()} Mean", {})[asset.name] = trace.mean_loss()
    names = [a.name for a in assets]
    rows2 = [[label, *(table2[label][n] for n in names)] for label in ("GBT Min", "IID Min", "GBT Mean", "IID Mean")]
    io.write_csv(out_dir / "table2_mse.csv", ["", *names], rows2, conf)

    table3 = {}
    for mode in TABLE3_MODES:
        runs = run_backtest(cfg, assets, mode)
        row = {
            "mean_rankic": float(np.mean([r.meta["mean_rankic"] for r in runs])),
            "mean_correlation": float(np.mean([r.meta["mean_correlation"] for r in runs])),
        }
        for period in ("os", "is"):
            metrics, _ = _period_report(runs, period)
            row.update({f"{period}_{k}": metrics[k] for k in ("sharpe", "annual_return", "max_drawdown")})
        table3[mode] = row
    rows3 = [[label, *(table3[m][key] for m in TABLE3_MODES)] for label, key in TABLE3_ROWS]
    io.write_csv(out_dir / "table3_selection.csv", ["", *TABLE3_MODES], rows3, conf)
    io.write_json(
        out_dir / "tables.json",
        {"table2": table2, "table3": table3, "correlation_definition": CORRELATION_DEFINITION},
        conf,
    )
    return {"table2": rows2, "table3": rows3, "assets": names}
