# src/pipeline/operations.py
import os
from collections import OrderedDict
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from common.errors import ConfigError, DataError, NumericalError
from experiment.metrics import fit_quality, per_models
from experiment.runner import ExperimentSpec, run_experiment
from functional.dataset import FunctionalDataset, GridSpec
from functional.io import load_dataset, write_curves, write_frame, write_json, write_responses
from glm.links import get_link
from glm.scoring import GlmFit, fisher_scoring, null_log_likelihood, wald_table, with_intercept
from glm.selection import SelectionLimits, best_subset_over_delta
from helpers.formatting import significance_stars, spec_hash
from impact.estimator import DEFAULT_THRESHOLD_A, PoiConfig, estimate_poi
from kernel.nadaraya_watson import KernelConfig, fit_nw, predict_in_sample
from simulation.dgp import get_preset
from simulation.processes import ProcessSpec
from simulation.responses import ImpactModelSpec, generate_responses
from simulation.sampling import sample_paths


def coefficient_table(fit: GlmFit, names: List[str]) -> List[Dict[str, Any]]:
    rows = []
    if fit.converged:
        beta, se, z, p_values = wald_table(fit)
    else:
        beta = fit.beta
        se = z = p_values = [None] * fit.K
    for name, b, s, zz, pv in zip(names, beta, se, z, p_values):
        rows.append(OrderedDict(
            name=name, estimate=b, std_error=s, z=zz, p_value=pv,
            stars=significance_stars(pv) if pv is not None else '',
        ))
    return rows


def model_summary(data: FunctionalDataset, design: np.ndarray, fit: GlmFit, names: List[str]) -> Dict[str, Any]:
    """
    Coefficients with Wald statistics, information criteria and, for a
    binary response under the logit link, McFadden R^2 and Somers' D.
    """
    summary = OrderedDict(
        converged=fit.converged,
        iterations=fit.iterations,
        coefficients=coefficient_table(fit, names),
        loglik=fit.loglik,
        aic=fit.aic,
        bic=fit.bic,
        n=fit.n,
    )
    y = data.Y
    binary = np.isin(y, (0.0, 1.0)).all() and 0 < y.sum() < y.size
    if fit.link.value == 'logit' and binary:
        link = get_link(fit.link)
        probabilities = link.mean(design @ fit.beta)
        null_loglik = null_log_likelihood(y, link)
        summary['mcfadden_r2'], summary['somers_d'] = fit_quality(y, probabilities, fit.loglik, null_loglik)
        summary['null_loglik'] = null_loglik
    if fit.message:
        summary['message'] = fit.message
    return summary


def _tau_names(locations) -> List[str]:
    return ['intercept'] + [f"X(t={t:.6g})" for t in locations]


class PipelineOperations:
    """
    File-level work behind the simulate, estimate, benchmark and analyze
    commands.
    """
    def __init__(self, cli_instance, commands_instance, logger_instance):
        self.cli = cli_instance
        self.commands = commands_instance
        self.logger = logger_instance

    # ------------------------------
    # HELPERS
    # ------------------------------

    def _io_paths(self, io: Dict[str, Any]) -> Dict[str, str]:
        out_dir = io.get('out_dir') or '.'
        return {
            key: io[key] if os.path.isabs(io[key]) else os.path.join(out_dir, io[key])
            for key in ('curves', 'responses', 'metadata')
        }

    def _load(self, io: Dict[str, Any], settings: Dict[str, Any]) -> FunctionalDataset:
        paths = self._io_paths(io)
        data = load_dataset(paths['curves'], paths['responses'], paths['metadata'])
        if settings.get('standardize'):
            data = data.standardized(scale=True)
            self.logger.info("Curves standardized pointwise (centered and scaled)")
        elif settings.get('center'):
            data = data.centered()
            self.logger.info("Curves centered pointwise")
        return data

    def _design(self, data: FunctionalDataset, indices) -> np.ndarray:
        indices = np.asarray(indices, dtype=int)
        return with_intercept(data.X[:, indices]) if indices.size else np.ones((data.n, 1))

    # ------------------------------
    # OPERATIONS METHODS
    # ------------------------------

    def simulate(self, settings: Dict[str, Any], io: Dict[str, Any], seed: Optional[int]) -> Dict[str, str]:
        """
        Draws curves and responses and writes the curves CSV, the responses
        CSV and the metadata JSON.
        """
        if settings.get('process') or settings.get('model'):
            if not (settings.get('process') and settings.get('model')):
                raise ConfigError("A custom simulation needs both 'process' and 'model'.")
            process = ProcessSpec.from_dict(settings['process'])
            model = ImpactModelSpec.from_dict(settings['model'])
            name = 'custom'
        else:
            preset = get_preset(settings.get('dgp', 'DGP1'))
            process, model, name = preset.process, preset.model, preset.name
        grid = GridSpec(float(settings.get('a', 0.0)), float(settings.get('b', 1.0)), int(settings['p']))
        n = int(settings['n'])

        path_seed, response_seed = np.random.SeedSequence(seed).spawn(2)
        X = sample_paths(process, grid, n, path_seed, settings.get('method'))
        draw = generate_responses(X, grid, model, response_seed)

        paths = self._io_paths(io)
        out_dir = os.path.dirname(os.path.abspath(paths['curves']))
        if not os.path.isdir(out_dir):
            raise DataError(f"Output directory does not exist: {out_dir}")
        write_curves(X, paths['curves'])
        write_responses(draw.Y, paths['responses'], {'mean': draw.mean})
        write_json(OrderedDict(
            dgp=name,
            seed=seed,
            n=n,
            grid=grid.to_dict(),
            process=process.to_dict(),
            model=model.to_dict(),
            tau_indices=draw.indices,
            tau_grid_points=grid.points[draw.indices],
        ), paths['metadata'])
        self.logger.info(f"Simulated {n} curves on {grid.p} points ({name}) into {out_dir}")
        return paths

    def _trh_block(self, data: FunctionalDataset, settings: Dict[str, Any], link) -> Dict[str, Any]:
        config = PoiConfig(
            k_delta=settings.get('k_delta'),
            c_delta=float(settings.get('c_delta') or 1.5),
            threshold_a=float(settings.get('threshold_a') or DEFAULT_THRESHOLD_A),
            difference_order=int(settings.get('difference_order') or 2),
            max_candidates=settings.get('max_candidates'),
        )
        estimate = estimate_poi(data, config)
        order = np.argsort(estimate.selected_locations, kind='stable')
        indices = estimate.selected_indices[order]
        locations = estimate.selected_locations[order]
        design = self._design(data, indices)
        fit = fisher_scoring(design, data.Y, link)
        block = OrderedDict(
            delta=estimate.delta,
            k_delta=estimate.k_delta,
            difference_order=int(estimate.difference_order),
            threshold=estimate.lam,
            s_hat=estimate.s_hat,
            candidates=[
                OrderedDict(grid_index=c.grid_index, location=c.location, score=c.score, statistic=s)
                for c, s in zip(estimate.candidates, estimate.statistics)
            ],
            selected=[OrderedDict(grid_index=i, location=t) for i, t in zip(indices, locations)],
            model=model_summary(data, design, fit, _tau_names(locations)),
        )
        if settings.get('nonparametric'):
            block['nonparametric'] = self._nw_block(data, locations, settings)
        return block

    def _poi_block(self, data: FunctionalDataset, settings: Dict[str, Any], link) -> Dict[str, Any]:
        limits = SelectionLimits(
            max_subset_size=int(settings.get('max_subset_size', 6)),
            max_pool=int(settings.get('max_pool', 20)),
        )
        selection = best_subset_over_delta(
            data, None, link, limits, n_deltas=int(settings.get('n_deltas', 10))
        )
        design = self._design(data, selection.selected_indices)
        block = OrderedDict(
            delta=selection.best_delta,
            k_delta=selection.best_k_delta,
            delta_grid=selection.delta_grid,
            models_evaluated=len(selection.trace),
            s_hat=selection.s_hat,
            selected=[
                OrderedDict(grid_index=i, location=t)
                for i, t in zip(selection.selected_indices, selection.locations)
            ],
            model=model_summary(data, design, selection.fit, _tau_names(selection.locations)),
            warnings=selection.warnings,
        )
        if settings.get('nonparametric'):
            block['nonparametric'] = self._nw_block(data, selection.locations, settings)
        return block

    def _nw_block(self, data: FunctionalDataset, locations, settings: Dict[str, Any]) -> Dict[str, Any]:
        if len(locations) == 0:
            return OrderedDict(bandwidths=[], in_sample_mse=float(np.var(data.Y)), fallback='sample mean')
        fit = fit_nw(data, locations, KernelConfig(kernel=settings.get('kernel', 'gaussian'),
                                                   c_h=float(settings.get('c_h', 1.0))))
        predictions = predict_in_sample(fit)
        return OrderedDict(
            kernel=fit.kernel.value,
            bandwidths=fit.bandwidths,
            in_sample_mse=float(np.mean((data.Y - predictions) ** 2)),
        )

    def estimate(self, settings: Dict[str, Any], io: Dict[str, Any], output: Optional[str] = None) -> Dict[str, Any]:
        """
        Runs the threshold (TRH) and/or BIC (POI) estimators on a dataset and
        writes one labeled block per estimator.
        """
        data = self._load(io, settings)
        link = get_link(settings.get('link', 'logit'))
        estimator = str(settings.get('estimator', 'both')).lower()
        if estimator not in ('trh', 'poi', 'both'):
            raise ConfigError(f"Unknown estimator '{estimator}'; use trh, poi or both.")

        report = OrderedDict(metadata=OrderedDict(
            n=data.n,
            grid=data.grid.to_dict(),
            link=link.kind.value,
            centered=bool(data.metadata.get('centered', False)),
            scaled=bool(data.metadata.get('scaled', False)),
            settings=settings,
        ))
        if estimator in ('trh', 'both'):
            report['TRH'] = self._trh_block(data, settings, link)
            self.logger.info(f"TRH: S_hat={report['TRH']['s_hat']} at delta={report['TRH']['delta']:.4g}")
        if estimator in ('poi', 'both'):
            report['POI'] = self._poi_block(data, settings, link)
            self.logger.info(f"POI: S_hat={report['POI']['s_hat']} at delta={report['POI']['delta']:.4g}")

        output = output or os.path.join(io.get('out_dir') or '.', 'estimate.json')
        write_json(report, output)
        self.logger.info(f"Estimation report written to {output}")
        return report

    def benchmark(self, settings: Dict[str, Any], seed: Optional[int], workers: int = 1):
        """
        Runs a Monte Carlo experiment and writes report JSON, per-replication
        CSV and per-cell summary CSV.
        """
        options = {k: v for k, v in settings.items() if k not in ('out_dir', 'prefix')}
        options['seed'] = int(seed if seed is not None else options.get('seed', 0) or 0)
        options['workers'] = int(workers or 1)
        for key in ('n_list', 'p_list', 'estimators'):
            if key in options and not isinstance(options[key], (list, tuple)):
                options[key] = [options[key]]
        spec = ExperimentSpec.from_dict(options)
        report = run_experiment(spec)

        out_dir = settings.get('out_dir') or '.'
        prefix = settings.get('prefix') or f"{(spec.dgp or 'custom').lower()}_{spec.fingerprint()}"
        paths = OrderedDict(
            report=os.path.join(out_dir, f"{prefix}_report.json"),
            records=os.path.join(out_dir, f"{prefix}_records.csv"),
            summary=os.path.join(out_dir, f"{prefix}_summary.csv"),
            locations=os.path.join(out_dir, f"{prefix}_locations.csv"),
        )
        report.write_json(paths['report'])
        report.write_csv(paths['records'])
        report.write_summary_csv(paths['summary'])
        report.write_locations_csv(paths['locations'])
        for aggregate in report.aggregates:
            self.logger.info(
                f"{aggregate['estimator']} n={aggregate['n']} p={aggregate['p']}: "
                f"P(S_hat=S)={aggregate['p_correct']:.3f}, AvgMSE={aggregate['avg_mse_matched']:.3g}"
                + (f", MASE={aggregate['mase']:.4g}" if aggregate['mase'] is not None else '')
            )
        self.logger.info(f"Benchmark outputs written to {out_dir}")
        return report, paths

    def analyze(self, settings: Dict[str, Any], io: Dict[str, Any]) -> pd.DataFrame:
        """
        Compares the BIC-selected impact-point model with the peak-and-end
        models PER-1 and PER-2 on the same data.
        """
        data = self._load(io, settings)
        link = get_link(settings.get('link', 'logit'))
        limits = SelectionLimits(max_subset_size=int(settings.get('max_subset_size', 6)))
        selection = best_subset_over_delta(data, None, link, limits, n_deltas=int(settings.get('n_deltas', 10)))

        models = OrderedDict()
        design = self._design(data, selection.selected_indices)
        models['POI'] = model_summary(data, design, selection.fit, _tau_names(selection.locations))
        models['POI']['delta'] = selection.best_delta
        per_names = {
            'PER-1': ['intercept', 'X(p_abs)', 'X(end)'],
            'PER-2': ['intercept', 'X(p_pos)', 'X(p_neg)', 'X(end)'],
        }
        for name, columns in per_models(data).items():
            per_design = with_intercept(columns)
            try:
                per_fit = fisher_scoring(per_design, data.Y, link)
            except NumericalError as e:
                self.logger.warning(f"{name} could not be fitted: {e}")
                models[name] = OrderedDict(coefficients=[], error=str(e))
                continue
            models[name] = model_summary(data, per_design, per_fit, per_names[name])

        rows = []
        for name, summary in models.items():
            row = OrderedDict(model=name)
            for coefficient in summary['coefficients']:
                row[coefficient['name']] = (
                    f"{coefficient['estimate']:.4g}{coefficient['stars']}"
                )
            for key in ('loglik', 'aic', 'bic', 'mcfadden_r2', 'somers_d'):
                row[key] = summary.get(key)
            rows.append(row)
        table = pd.DataFrame(rows)

        out_dir = io.get('out_dir') or '.'
        write_json(OrderedDict(metadata=OrderedDict(n=data.n, grid=data.grid.to_dict(),
                                                    hash=spec_hash(settings)), models=models),
                   os.path.join(out_dir, 'analyze.json'))
        write_frame(table, os.path.join(out_dir, 'analyze.csv'))
        self.logger.info(f"Analysis of {data.n} subjects written to {out_dir}")
        return table
