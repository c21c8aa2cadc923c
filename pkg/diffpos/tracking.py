import mlflow  # type: ignore
from typing import Any, Dict, Mapping, Optional


def mlflow_config(uri: str, experiment_name: str) -> None:
    """Configure mlflow with tracking url and experiment.

    Args:
        uri (str): mlflow tracking uri.
        experiment_name (str): mlflow experiment name.

    Examples:
        >>> mlflow_config("https://mlflow.dummy.com", "diffpos-census")  # doctest: +SKIP
    """
    mlflow.set_tracking_uri(uri)
    mlflow.set_experiment(experiment_name)


def flatten_metrics(metrics: Mapping[str, Any], prefix: str = "") -> Dict[str, float]:
    """Numeric leaves of a nested report as ``parent_child`` keys.

    Booleans become 0/1; strings, lists and missing values are dropped.

    Examples:
        >>> flatten_metrics({"dichotomy": {"passed": 3, "tags": {"branch_a": 2}}, "name": "x"})
        {'dichotomy_passed': 3.0, 'dichotomy_tags_branch_a': 2.0}
    """
    flat: Dict[str, float] = {}
    for key, value in metrics.items():
        name = f"{prefix}_{key}" if prefix else str(key)
        if isinstance(value, Mapping):
            flat.update(flatten_metrics(value, name))
        elif isinstance(value, bool):
            flat[name] = float(value)
        elif isinstance(value, (int, float)) and value == value:
            flat[name] = float(value)
    return flat


def log_metrics(metrics: Mapping[str, Any]) -> None:
    """Log the numeric leaves of a report to the active run.

    Examples:
        >>> log_metrics({"monotonicity": {"passed": 200, "failed": 0}})  # doctest: +SKIP
    """
    for k, v in flatten_metrics(metrics).items():
        mlflow.log_metric(k, v)


def log_run(uri: str, experiment_name: str, run_name: str, metrics: Mapping[str, Any],
            params: Optional[Mapping[str, Any]] = None) -> str:
    """Log one suite or census report as an mlflow run.

    Returns:
        str: the run id.
    """
    mlflow_config(uri, experiment_name)
    with mlflow.start_run(run_name=run_name) as run:
        if params:
            mlflow.log_params({k: str(v) for k, v in params.items()})
        log_metrics(metrics)
    return run.info.run_id
