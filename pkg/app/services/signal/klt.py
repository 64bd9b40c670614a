"""Karhunen-Loeve subspace denoising.

A single-channel signal is denoised by eigen-decomposing the Toeplitz matrix
of its lag-limited unbiased autocorrelation, locating the boundary between the
noise floor and the signal subspace with a relative log-eigenvalue jump rule,
and projecting non-overlapping length-L frames of the zero-mean signal onto
the retained eigenvectors.
"""

import logging
from typing import Optional

import numpy as np
from scipy import linalg

from app.core.exceptions import DomainError, NumericalError, SignalLengthError
from app.database.models.signal import AutocorrSequence, EigenBasis, SubspaceSelection

logger = logging.getLogger(__name__)

DEFAULT_LAG = 50
DEFAULT_JUMP_THRESHOLD = 0.10
EIGENVALUE_FLOOR = 1e-12
LOG_GUARD = 1e-12
SYMMETRY_TOLERANCE = 1e-12


def autocorrelation(x: np.ndarray, lag: int = DEFAULT_LAG) -> AutocorrSequence:
    """Unbiased autocorrelation ``r[k] = sum(x[n] x[n+k]) / (N - k)``.

    The estimate is taken on the values as given; ``denoise`` passes the
    zero-mean signal.

    Args:
        x: Signal samples.
        lag: Number of lags L (r[0] .. r[L-1]).

    Returns:
    -------
        AutocorrSequence: The L autocorrelation values.

    Raises:
    ------
        SignalLengthError: If the signal has no more than L samples.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if lag < 2:
        raise DomainError(f"lag must be at least 2, got {lag}")
    if n <= lag:
        raise SignalLengthError(f"signal of {n} samples needs more than {lag} for lag {lag}")
    values = np.array([x[: n - k] @ x[k:] / (n - k) for k in range(lag)])
    return AutocorrSequence(values=values, lag=lag)


def toeplitz(r: AutocorrSequence) -> np.ndarray:
    """Symmetric Toeplitz matrix ``M[i, j] = r[|i - j|]``."""
    return linalg.toeplitz(r.values)


def symmetric_eigen(matrix: np.ndarray) -> EigenBasis:
    """Eigen-decompose a real symmetric matrix.

    Eigenvalues are returned in ascending order with paired eigenvector
    columns. Each eigenvector's sign is fixed so that its largest-magnitude
    component is positive, which makes the output independent of LAPACK sign
    conventions.

    Raises:
    ------
        DomainError: If the matrix is not square and symmetric.
        NumericalError: If the solver does not converge.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {matrix.shape}")
    scale = max(1.0, float(np.max(np.abs(matrix))) if matrix.size else 1.0)
    asymmetry = float(np.max(np.abs(matrix - matrix.T))) if matrix.size else 0.0
    if asymmetry > SYMMETRY_TOLERANCE * scale:
        raise DomainError(f"matrix is not symmetric (max |M - M^T| = {asymmetry:.3e})")

    try:
        eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as e:
        off_diagonal = float(np.linalg.norm(matrix - np.diag(np.diag(matrix))))
        raise NumericalError(
            f"eigen-decomposition did not converge (off-diagonal norm {off_diagonal:.3e})"
        ) from e
    if not (np.all(np.isfinite(eigenvalues)) and np.all(np.isfinite(eigenvectors))):
        raise NumericalError("eigen-decomposition produced non-finite values")

    pivots = np.argmax(np.abs(eigenvectors), axis=0)
    signs = np.sign(eigenvectors[pivots, np.arange(eigenvectors.shape[1])])
    signs[signs == 0] = 1.0
    return EigenBasis(eigenvalues=eigenvalues, eigenvectors=eigenvectors * signs)


def relative_log_changes(logs: np.ndarray) -> np.ndarray:
    """Relative steps ``(g[i] - g[i-1]) / |g[i-1]|`` between consecutive log-eigenvalues.

    Entry ``j`` is the step into 0-based index ``j + 1``. A near-zero
    denominator turns a positive step into ``inf`` and any other step into 0.
    """
    logs = np.asarray(logs, dtype=np.float64)
    steps = np.diff(logs)
    previous = np.abs(logs[:-1])
    small = previous < LOG_GUARD
    ratios = np.where(small, 0.0, steps / np.where(small, 1.0, previous))
    return np.where(small & (steps > 0), np.inf, ratios)


def select_signal_subspace(
    eigenvalues: np.ndarray, threshold: float = DEFAULT_JUMP_THRESHOLD
) -> SubspaceSelection:
    """Locate the first large relative jump in the log-eigenvalue sequence.

    Eigenvalues are clamped to ``max(lambda, 1e-12 * lambda_L)`` and logged.
    The cut is the smallest 1-based index ``i >= 2`` with
    ``(g[i] - g[i-1]) / |g[i-1]| > threshold``; when ``|g[i-1]| < 1e-12`` a
    positive step counts as an infinite ratio and a zero step as none. If no
    index qualifies every eigenvector is retained (k = 1).

    Args:
        eigenvalues: Ascending eigenvalues.
        threshold: Relative-change threshold.

    Returns:
    -------
        SubspaceSelection: The cut index and the clamped log-eigenvalues.
    """
    eigenvalues = np.asarray(eigenvalues, dtype=np.float64)
    if eigenvalues.ndim != 1 or eigenvalues.shape[0] < 2:
        raise DomainError("subspace selection needs at least 2 eigenvalues")
    if np.any(np.diff(eigenvalues) < 0):
        raise DomainError("eigenvalues must be sorted in ascending order")

    largest = eigenvalues[-1]
    if largest <= 0:
        # silent signal: nothing to separate
        logs = np.zeros_like(eigenvalues)
        return SubspaceSelection(retain_from_index=1, threshold=threshold, clamped_log_eigenvalues=logs)

    logs = np.log(np.maximum(eigenvalues, EIGENVALUE_FLOOR * largest))
    hits = np.flatnonzero(relative_log_changes(logs) > threshold)
    retain_from = int(hits[0]) + 2 if hits.size else 1
    return SubspaceSelection(
        retain_from_index=retain_from, threshold=threshold, clamped_log_eigenvalues=logs
    )


def project_onto_subspace(x: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Project non-overlapping frames of ``x`` onto the columns of ``vectors``.

    The signal is cut into length-L frames (the last one zero-padded), each
    frame is replaced by ``Q Q^T frame`` and the result is unframed and
    truncated to the input length.

    Args:
        x: Signal samples (normally zero-mean).
        vectors: L x k matrix with orthonormal columns.

    Returns:
    -------
        np.ndarray: Reconstructed signal of the input's length.
    """
    x = np.asarray(x, dtype=np.float64)
    frame = vectors.shape[0]
    n = x.shape[0]
    n_frames = -(-n // frame)
    padded = np.zeros(n_frames * frame)
    padded[:n] = x
    frames = padded.reshape(n_frames, frame).T
    coefficients = vectors.T @ frames
    reconstructed = vectors @ coefficients
    return reconstructed.T.reshape(-1)[:n]


def _zero_mean_projection(x: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Project ``x`` onto the framed subspace intersected with zero-mean signals.

    With ``P`` the framed projection and ``u = P 1`` the image of the constant,
    the result is ``P x - u (1^T P x) / (1^T u)``, whose sum is exactly zero.
    """
    projected = project_onto_subspace(x, vectors)
    ones_image = project_onto_subspace(np.ones(x.shape[0]), vectors)
    weight = float(np.sum(ones_image))
    if weight <= LOG_GUARD * x.shape[0]:
        # constant direction is outside the subspace
        return projected
    return projected - ones_image * (float(np.sum(projected)) / weight)


def denoise(
    x: np.ndarray,
    lag: int = DEFAULT_LAG,
    threshold: float = DEFAULT_JUMP_THRESHOLD,
    basis: Optional[EigenBasis] = None,
) -> np.ndarray:
    """Denoise a single channel by signal-subspace projection.

    The mean is removed, the autocorrelation matrix of the zero-mean signal is
    decomposed (unless ``basis`` is supplied), the signal subspace is selected
    and the framed signal is projected onto the zero-mean part of it. The
    input mean is then added back, so the output mean equals the input mean
    and a second pass with the same basis returns its input (for lengths that
    are a multiple of ``lag``; the zero-padded last frame is not a projection).

    Args:
        x: Signal of at least ``2 * lag`` samples.
        lag: Autocorrelation lag L, the frame length.
        threshold: Jump-rule threshold.
        basis: Precomputed eigen-basis of size L to use instead of estimating one.

    Returns:
    -------
        np.ndarray: Denoised signal of the input's length.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DomainError("denoise expects a single channel")
    if x.shape[0] < 2 * lag:
        raise SignalLengthError(
            f"signal of {x.shape[0]} samples is shorter than 2 x lag ({2 * lag})"
        )
    mean = float(np.mean(x))
    centred = x - mean

    if basis is None:
        basis = symmetric_eigen(toeplitz(autocorrelation(centred, lag)))
    elif basis.size != lag:
        raise DomainError(f"basis of size {basis.size} does not match lag {lag}")

    selection = select_signal_subspace(basis.eigenvalues, threshold)
    retained = basis.eigenvectors[:, selection.retain_from_index - 1 :]
    logger.debug(f"KLT retains {selection.n_retained} of {lag} eigenvectors")

    reconstructed = _zero_mean_projection(centred, retained)
    return reconstructed + mean


def denoise_channels(
    channels: np.ndarray,
    lag: int = DEFAULT_LAG,
    threshold: float = DEFAULT_JUMP_THRESHOLD,
) -> np.ndarray:
    """Apply ``denoise`` independently to each row of a 2-D array."""
    channels = np.asarray(channels, dtype=np.float64)
    return np.vstack([denoise(row, lag, threshold) for row in channels])
