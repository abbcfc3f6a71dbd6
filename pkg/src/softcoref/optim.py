"""AdaGrad training with one-document mini-batches.

Each epoch visits the training documents in a seeded shuffled order,
computes the loss and analytic gradient of one document at a time, and
applies an AdaGrad update.  Dev metrics are recorded after every epoch
and the parameters of the best dev CoNLL-average epoch are returned.
Training is deterministic: identical corpus, config and seed give
bit-identical parameters.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .analysis import MetricReport, evaluate_corpus
from .corpus import Document
from .errors import ConfigError, TrainingError
from .model import (LOSS_KINDS, CostConfig, ModelParams, document_loss,
                    document_loss_and_grad)

ADAGRAD_EPS = 1e-8

# Recall-precision trade-off grid for the relaxed-metric losses.
BETA_GRID = (math.sqrt(0.8), 1.0, math.sqrt(1.2), math.sqrt(1.4),
             math.sqrt(1.6), math.sqrt(1.8), 1.5, 2.0)


@dataclass(frozen=True)
class TrainConfig:
    loss: str = "mr-heuristic"
    beta: float = 1.0
    temperature: float = 1.0
    learning_rate: float = 0.05
    epochs: int = 10
    lam: float = 1e-6
    seed: int = 0
    hidden_a: int = 200
    hidden_p: int = 700
    init_scale: float = 0.1
    init_model: Optional[ModelParams] = None
    costs: CostConfig = field(default_factory=CostConfig)
    anneal: Optional[tuple[tuple[int, float], ...]] = None
    eps: float = ADAGRAD_EPS

    def __post_init__(self):
        if self.loss not in LOSS_KINDS:
            raise ConfigError(f"unknown loss kind {self.loss!r} (expected one of {LOSS_KINDS})")
        if self.beta <= 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be positive, got {self.temperature}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.learning_rate}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be at least 1, got {self.epochs}")
        if self.lam < 0:
            raise ConfigError(f"l1 weight must be nonnegative, got {self.lam}")
        if self.eps <= 0:
            raise ConfigError(f"adagrad eps must be positive, got {self.eps}")
        if self.hidden_a < 1 or self.hidden_p < 1:
            raise ConfigError("hidden sizes must be at least 1")
        if self.anneal is not None:
            for entry in self.anneal:
                epoch, temp = entry
                if epoch < 1 or temp <= 0:
                    raise ConfigError(f"bad annealing entry {entry}: need epoch >= 1, T > 0")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    mean_loss: float
    dev: Optional[MetricReport]
    seconds: float


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)

    CSV_HEADER = "epoch,loss,muc,b3,ceaf_m,ceaf_e,blanc,lea,conll"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for rec in self.records:
            if rec.dev is None:
                metrics = ["nan"] * 7
            else:
                d = rec.dev
                metrics = [f"{x:.6f}" for x in (d.muc.f, d.b_cubed.f, d.ceaf_m.f,
                                                d.ceaf_e.f, d.blanc.f, d.lea.f, d.conll)]
            lines.append(f"{rec.epoch},{rec.mean_loss:.6f}," + ",".join(metrics))
        return "\n".join(lines) + "\n"


def adagrad_step(params: np.ndarray, grads: np.ndarray, accum: np.ndarray,
                 eta: float, eps: float = ADAGRAD_EPS) -> tuple[np.ndarray, np.ndarray]:
    """One AdaGrad update on flat coordinate vectors.

    accum += g^2; theta -= eta * g / (sqrt(accum) + eps).  Returns the
    new (params, accum) without mutating the inputs.
    """
    if params.shape != grads.shape or params.shape != accum.shape:
        raise ConfigError("params, grads and accum must share a shape")
    if eps <= 0:
        raise ConfigError(f"adagrad eps must be positive, got {eps}")
    if not np.all(np.isfinite(grads)):
        raise TrainingError("non-finite gradient in adagrad step")
    accum = accum + grads * grads
    params = params - eta * grads / (np.sqrt(accum) + eps)
    return params, accum


def _initial_params(corpus: Sequence[Document], config: TrainConfig) -> ModelParams:
    if config.init_model is not None:
        return config.init_model.copy()
    d_a = corpus[0].d_a
    d_p = max((doc.d_p for doc in corpus), default=1) or 1
    return ModelParams.random(d_a, d_p, config.hidden_a, config.hidden_p,
                              scale=config.init_scale, seed=[config.seed, 0])


def train(corpus: Sequence[Document], dev: Sequence[Document],
          config: TrainConfig) -> tuple[ModelParams, TrainHistory]:
    """Train on one-document mini-batches; return the best-dev params.

    Model selection uses the dev CoNLL average; with an empty dev set
    the final epoch's parameters are returned and dev columns are NaN.
    """
    if not corpus:
        raise ConfigError("training corpus is empty")
    d_a = corpus[0].d_a
    for doc in list(corpus) + list(dev):
        if doc.d_a != d_a:
            raise ConfigError(
                f"document {doc.id}: mention feature dim {doc.d_a} != {d_a}"
            )
    params = _initial_params(corpus, config)
    vec = params.to_vector()
    accum = np.zeros_like(vec)
    shuffle_rng = np.random.default_rng([config.seed, 1])
    schedule = dict(config.anneal) if config.anneal else {}
    temperature = config.temperature

    history = TrainHistory()
    best_conll = -np.inf
    best_params = params.copy()
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        temperature = schedule.get(epoch, temperature)
        losses = []
        for idx in shuffle_rng.permutation(len(corpus)):
            doc = corpus[idx]
            loss, grad = document_loss_and_grad(
                doc, params, config.loss, costs=config.costs, beta=config.beta,
                temperature=temperature, lam=config.lam,
            )
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss on document {doc.id} in epoch {epoch}"
                )
            gvec = grad.to_vector()
            if not np.all(np.isfinite(gvec)):
                raise TrainingError(
                    f"non-finite gradient on document {doc.id} in epoch {epoch}"
                )
            vec, accum = adagrad_step(vec, gvec, accum, config.learning_rate, config.eps)
            params = params.from_vector(vec)
            losses.append(loss)
        report = evaluate_corpus(dev, params) if dev else None
        history.records.append(EpochRecord(
            epoch=epoch, mean_loss=float(np.mean(losses)), dev=report,
            seconds=time.perf_counter() - start,
        ))
        if report is None:
            best_params = params.copy()
        elif report.conll > best_conll:
            best_conll = report.conll
            best_params = params.copy()
    return best_params, history


def grad_check(doc: Document, params: ModelParams, kind: str, h: float = 1e-5,
               seed: int = 0, *, costs: Optional[CostConfig] = None,
               beta: float = 1.0, temperature: float = 1.0,
               max_coords: int = 200) -> float:
    """Max relative error of the analytic gradient vs central differences.

    Checks every coordinate when there are at most ``max_coords``,
    otherwise a seeded random subset of that size.  The L1 term is
    excluded (its subgradient is not a derivative at zeros); relative
    error is |g_a - g_fd| / max(1, |g_a|, |g_fd|).
    """
    if not (1e-6 <= h <= 1e-4):
        raise ConfigError(f"step size {h} outside the supported range [1e-6, 1e-4]")
    _, grad = document_loss_and_grad(doc, params, kind, costs=costs, beta=beta,
                                     temperature=temperature, lam=0.0)
    gvec = grad.to_vector()
    vec = params.to_vector()

    def loss_at(v: np.ndarray) -> float:
        return document_loss(doc, params.from_vector(v), kind, costs=costs,
                             beta=beta, temperature=temperature, lam=0.0)

    if vec.size <= max_coords:
        coords = np.arange(vec.size)
    else:
        coords = np.random.default_rng(seed).choice(vec.size, size=max_coords, replace=False)
    worst = 0.0
    for c in coords:
        bumped = vec.copy()
        bumped[c] = vec[c] + h
        plus = loss_at(bumped)
        bumped[c] = vec[c] - h
        minus = loss_at(bumped)
        fd = (plus - minus) / (2.0 * h)
        rel = abs(gvec[c] - fd) / max(1.0, abs(gvec[c]), abs(fd))
        worst = max(worst, rel)
    return worst


def beta_sweep(corpus: Sequence[Document], dev: Sequence[Document],
               config: TrainConfig,
               betas: Sequence[float] = BETA_GRID) -> list[tuple[float, MetricReport]]:
    """Train one model per beta and report dev metrics for each."""
    if not dev:
        raise ConfigError("beta sweep needs a dev set to report on")
    results = []
    for beta in betas:
        params, _ = train(corpus, dev, replace(config, beta=beta))
        results.append((float(beta), evaluate_corpus(dev, params)))
    return results
