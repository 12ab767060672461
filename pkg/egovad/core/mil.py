"""
Top-k feature-magnitude multiple-instance learning: selection, composite
loss and a finite-difference gradient checker.
"""
import copy
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch
import torch.nn.functional as F

from egovad.core.config import settings
from egovad.core.temporal_model import SnippetOutput
from egovad.schemas.config import TrainConfig
from egovad.schemas.manifest import VideoLabel

logger = logging.getLogger(__name__)

LOSS_COMPONENTS = ("cls", "mag", "smooth", "sparse")


@dataclass
class Bag:
    """A video as a bag of snippet instances with its weak label"""

    video_id: str
    label: VideoLabel
    snippets: np.ndarray  # T' x D, FTB-transformed

    def __post_init__(self):
        if self.snippets.ndim != 2 or self.snippets.shape[0] < 1:
            raise ValueError(f"bag {self.video_id} needs at least one snippet")


@dataclass(frozen=True)
class TopK:
    indices: np.ndarray  # selection order: largest magnitude first
    mean: float


def topk_indices(magnitudes, k: int) -> np.ndarray:
    """Indices of the min(k, T') largest values, ties toward lower index."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    values = np.asarray(magnitudes, dtype=np.float64).reshape(-1)
    if values.size < 1:
        raise ValueError("cannot select from an empty bag")
    order = np.argsort(-values, kind="stable")
    return order[: min(k, values.size)]


def topk_select(magnitudes, k: int) -> TopK:
    values = np.asarray(magnitudes, dtype=np.float64).reshape(-1)
    indices = topk_indices(values, k)
    return TopK(indices=indices, mean=float(values[indices].mean()))


def _selected_mean(values: torch.Tensor, magnitudes: torch.Tensor, k: int) -> torch.Tensor:
    idx = topk_indices(magnitudes.detach().cpu().numpy(), k)
    return values[torch.as_tensor(idx, dtype=torch.long)].mean()


def mil_loss(
    abn: SnippetOutput, norm: SnippetOutput, cfg: TrainConfig
) -> Tuple[torch.Tensor, Dict[str, torch.Tensor]]:
    """
    Composite top-k MIL loss for one (abnormal, normal) bag pair.

    Snippets are selected by feature magnitude. The magnitude hinge pushes
    the abnormal top-k mean at least `margin` above the normal one; the BCE
    term pushes the selected abnormal scores to 1 and normal scores to 0;
    smoothness and sparsity regularize the abnormal bag's scores.

    Returns:
        (total, {"cls", "mag", "smooth", "sparse"}) as scalar tensors
    """
    mu_a = _selected_mean(abn.magnitudes, abn.magnitudes, cfg.k)
    mu_n = _selected_mean(norm.magnitudes, norm.magnitudes, cfg.k)
    mag = F.relu(cfg.margin - mu_a + mu_n)

    eps = settings.PROB_CLAMP
    p_a = _selected_mean(abn.scores, abn.magnitudes, cfg.k).clamp(eps, 1.0 - eps)
    p_n = _selected_mean(norm.scores, norm.magnitudes, cfg.k).clamp(eps, 1.0 - eps)
    cls = -0.5 * (torch.log(p_a) + torch.log(1.0 - p_n))

    scores = abn.scores
    smooth = ((scores[:-1] - scores[1:]) ** 2).sum()
    sparse = scores.sum()

    total = cls + cfg.alpha_mag * mag + cfg.beta_smooth * smooth + cfg.gamma_sparse * sparse
    return total, {"cls": cls, "mag": mag, "smooth": smooth, "sparse": sparse}


def bag_loss(model, abn: Bag, norm: Bag, cfg: TrainConfig, component: Optional[str] = None) -> torch.Tensor:
    dtype = next(model.parameters()).dtype
    abn_out = model(torch.as_tensor(abn.snippets, dtype=dtype))
    norm_out = model(torch.as_tensor(norm.snippets, dtype=dtype))
    total, components = mil_loss(abn_out, norm_out, cfg)
    return total if component is None else components[component]


def gradient_report(
    model,
    abn: Bag,
    norm: Bag,
    cfg: TrainConfig,
    eps: float = 1e-4,
    component: Optional[str] = None,
    blocks: Optional[List[str]] = None,
) -> Dict[str, float]:
    """
    Compare autograd gradients with central finite differences.

    Works on a float64 copy of the model. For each parameter element the
    relative error is |g_a - g_f| / max(|g_a|, |g_f|, 1e-8) with
    g_f = (f(theta + eps) - f(theta - eps)) / (2 eps).

    Args:
        component: Check one loss component instead of the total
        blocks: Restrict to these parameter names

    Returns:
        Maximum relative error per parameter block
    """
    probe = copy.deepcopy(model).double()
    params = dict(probe.named_parameters())
    names = blocks or list(params)

    probe.zero_grad()
    bag_loss(probe, abn, norm, cfg, component).backward()
    analytic = {
        name: (params[name].grad.detach().clone() if params[name].grad is not None
               else torch.zeros_like(params[name]))
        for name in names
    }

    report = {}
    with torch.no_grad():
        for name in names:
            flat = params[name].view(-1)
            grad = analytic[name].view(-1)
            worst = 0.0
            for i in range(flat.numel()):
                original = flat[i].item()
                flat[i] = original + eps
                f_plus = bag_loss(probe, abn, norm, cfg, component).item()
                flat[i] = original - eps
                f_minus = bag_loss(probe, abn, norm, cfg, component).item()
                flat[i] = original

                g_f = (f_plus - f_minus) / (2.0 * eps)
                g_a = grad[i].item()
                rel = abs(g_a - g_f) / max(abs(g_a), abs(g_f), 1e-8)
                worst = max(worst, rel)
            report[name] = worst

    logger.info(f"Gradient check over {len(names)} blocks: max relative error {max(report.values()):.3e}")
    return report


def gradient_check(model, abn: Bag, norm: Bag, cfg: TrainConfig, eps: float = 1e-4) -> float:
    """Maximum relative error between analytic and finite-difference gradients."""
    return max(gradient_report(model, abn, norm, cfg, eps).values())
