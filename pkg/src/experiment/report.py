# src/experiment/report.py
import json
import platform
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np
import pandas as pd

from functional.io import write_frame, write_json
from helpers.formatting import to_builtin

QUANTILES = (0.10, 0.25, 0.50, 0.75, 0.90)


def _mean(values) -> float:
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else float('nan')


def _quantiles(values) -> Dict[str, float]:
    return OrderedDict((f"q{int(round(q * 100))}", float(np.quantile(values, q))) for q in QUANTILES)


def summarize_cell(records: List[Any]) -> Dict[str, Any]:
    """
    Aggregates of one (estimator, n, p) cell. Failed replications count as
    misses in P(S_hat = S) and are left out of every error average.
    """
    first = records[0]
    S = first.s_true
    ok = [r for r in records if r.failure is None]

    mse_penalized = [_mean(r.penalized_sq_errors[j] for r in ok) for j in range(S)]
    mse_matched = [_mean(r.sq_errors[j] for r in ok) for j in range(S)]

    coefficients = OrderedDict()
    exact = [r for r in ok if r.beta_error]
    if exact:
        names = ['alpha'] + [f"beta_{r}" for r in range(1, S + 1)]
        estimates = np.array([r.beta_hat for r in exact])
        for k, name in enumerate(names):
            coefficients[name] = _quantiles(estimates[:, k])

    mase_values = [r.mase for r in ok if r.mase is not None]
    return OrderedDict(
        estimator=first.estimator,
        n=first.n,
        p=first.p,
        reps=len(records),
        failures=len(records) - len(ok),
        s_true=S,
        p_correct=float(np.mean([r.failure is None and r.s_hat == S for r in records])),
        s_hat_mean=_mean(r.s_hat for r in ok),
        mse_penalized=mse_penalized,
        avg_mse_penalized=float(np.mean(mse_penalized)) if S else float('nan'),
        mse_matched=mse_matched,
        avg_mse_matched=float(np.nanmean(mse_matched)) if S and not np.all(np.isnan(mse_matched)) else float('nan'),
        unmatched_reps=sum(r.unmatched > 0 for r in ok),
        selected_unmatched_reps=sum(r.selected_unmatched > 0 for r in ok),
        median_max_error=float(np.median([r.max_abs_error for r in ok])) if ok and S else float('nan'),
        coefficient_quantiles=coefficients,
        mase=float(np.mean(mase_values)) if mase_values else None,
    )


@dataclass
class McReport:
    records: List[Any]
    aggregates: List[Dict[str, Any]]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def cell(self, estimator: str, n: int, p: int) -> Dict[str, Any]:
        for aggregate in self.aggregates:
            if (aggregate['estimator'], aggregate['n'], aggregate['p']) == (estimator.upper(), n, p):
                return aggregate
        raise KeyError(f"No cell for {estimator} n={n} p={p}")

    def to_frame(self) -> pd.DataFrame:
        """
        One row per (replication, estimator); list fields are spread over
        numbered columns.
        """
        rows = []
        for record in self.records:
            row = OrderedDict(
                estimator=record.estimator, n=record.n, p=record.p, rep=record.rep,
                s_true=record.s_true, s_hat=record.s_hat, delta=record.delta,
                converged=record.converged, unmatched=record.unmatched,
                selected_unmatched=record.selected_unmatched,
                max_abs_error=record.max_abs_error, mase=record.mase,
            )
            for j in range(record.s_true):
                row[f"tau_hat_{j + 1}"] = record.matched[j] if j < len(record.matched) else None
                row[f"sq_error_{j + 1}"] = record.sq_errors[j] if j < len(record.sq_errors) else None
            for k in range(record.s_true + 1):
                row[f"beta_error_{k}"] = record.beta_error[k] if record.beta_error else None
            row['taus_hat'] = json.dumps(record.taus_hat)
            row['failure'] = record.failure or ''
            rows.append(row)
        return pd.DataFrame(rows)

    def summary_frame(self) -> pd.DataFrame:
        rows = []
        for aggregate in self.aggregates:
            row = OrderedDict((k, v) for k, v in aggregate.items() if not isinstance(v, (list, dict)))
            for j, value in enumerate(aggregate['mse_matched'], start=1):
                row[f"mse_matched_{j}"] = value
            for j, value in enumerate(aggregate['mse_penalized'], start=1):
                row[f"mse_penalized_{j}"] = value
            rows.append(row)
        return pd.DataFrame(rows)

    def location_frame(self) -> pd.DataFrame:
        """
        Matched location MSE of every estimator side by side, one row per
        (n, p) cell and one column per (estimator, true location).
        """
        rows: Dict[tuple, Dict[str, Any]] = OrderedDict()
        for aggregate in self.aggregates:
            row = rows.setdefault((aggregate['n'], aggregate['p']), OrderedDict(n=aggregate['n'], p=aggregate['p']))
            for j, value in enumerate(aggregate['mse_matched'], start=1):
                row[f"{aggregate['estimator']}_mse_tau_{j}"] = value
            row[f"{aggregate['estimator']}_avg_mse"] = aggregate['avg_mse_matched']
        return pd.DataFrame(list(rows.values()))

    def to_dict(self) -> Dict[str, Any]:
        return OrderedDict(
            metadata=self.metadata,
            aggregates=self.aggregates,
            locations=self.location_frame().to_dict(orient='records'),
            records=[to_builtin(r) for r in self.records],
        )

    def write_json(self, path: str):
        write_json(self.to_dict(), path)

    def write_csv(self, path: str):
        write_frame(self.to_frame(), path)

    def write_summary_csv(self, path: str):
        write_frame(self.summary_frame(), path)

    def write_locations_csv(self, path: str):
        write_frame(self.location_frame(), path)


def build_report(spec, records: List[Any], runtime: float) -> McReport:
    groups: Dict[tuple, List[Any]] = OrderedDict()
    for record in records:
        groups.setdefault((record.estimator, record.n, record.p), []).append(record)
    order = {name: i for i, name in enumerate(spec.estimators)}
    keys = sorted(groups, key=lambda k: (k[1], k[2], order.get(k[0], 0)))
    aggregates = [summarize_cell(groups[k]) for k in keys]
    metadata = OrderedDict(
        spec_hash=spec.fingerprint(),
        seed=spec.seed,
        dgp=spec.dgp,
        spec=spec.to_dict(),
        runtime_seconds=runtime,
        python=platform.python_version(),
        numpy=np.__version__,
    )
    return McReport(records=records, aggregates=aggregates, metadata=metadata)
