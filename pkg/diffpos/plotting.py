import matplotlib.pyplot as plt  # type: ignore
import pandas as pd  # type: ignore
import seaborn as sns  # type: ignore
from typing import Any, List, Optional, Sequence
from .evaluation import create_basin_confusion_matrix


def _finish(output_path: Optional[str]) -> None:
    if output_path:
        plt.savefig(output_path, bbox_inches="tight")
    else:
        plt.show()
    plt.close()


def basin_labels(grid: pd.DataFrame) -> pd.Series:
    """``e<k>`` for convergent samples, the class name otherwise."""
    convergent = grid["class"] == "convergent"
    labels = grid["class"].astype(str).copy()
    index = grid.loc[convergent, "equilibrium_index"]
    labels[convergent] = ["e" + str(int(i)) if pd.notna(i) else "convergent" for i in index]
    return labels


def plot_census_grid(grid: pd.DataFrame, figure_size: int = 2,
                     output_path: Optional[str] = None) -> None:
    """Scatter plot of a two-dimensional census grid coloured by basin.

    Args:
        grid (:obj:`pandas.DataFrame`): census CSV grid with ``x0``, ``x1``, ``class``
          and ``equilibrium_index`` columns.
        figure_size (int): scale of the figure.
        output_path (str, optional): output image file path. If no output path
          is given, instead of saving, plt.show() is executed.
    """
    if "x1" not in grid:
        raise ValueError("plot_census_grid needs a two-dimensional grid (columns x0, x1).")
    plt.figure(figsize=(figure_size * 3, figure_size * 3))
    sns.scatterplot(x=grid["x0"], y=grid["x1"], hue=basin_labels(grid), s=4, linewidth=0)
    plt.title("Census samples by limit")
    plt.xlabel("x0", fontsize=12)
    plt.ylabel("x1", fontsize=12)
    _finish(output_path)


def plot_cluster_histogram(cluster_counts: Sequence[int], figure_size: int = 2,
                           output_path: Optional[str] = None) -> None:
    """Bar chart of the number of lines per non-convergent cluster count."""
    counts = pd.Series(list(cluster_counts)).value_counts().sort_index()
    plt.figure(figsize=(figure_size * 4, figure_size * 2))
    sns.barplot(x=counts.index, y=counts.values, alpha=0.8)
    plt.title("Non-convergent clusters per line")
    plt.ylabel("Number of lines", fontsize=12)
    plt.xlabel("Clusters", fontsize=12)
    _finish(output_path)


def plot_basin_agreement(coarse_labels: Sequence[Any], fine_labels: Sequence[Any],
                         figure_size: int = 2, percentage: bool = False,
                         selected_labels: Optional[List[Any]] = None,
                         output_path: Optional[str] = None) -> None:
    """Heatmap of basin labels at shared nodes of two refinement levels."""
    df_cm = create_basin_confusion_matrix(coarse_labels, fine_labels, percentage,
                                          selected_labels)
    plt.figure(figsize=(4 * figure_size, 3 * figure_size))
    sns.heatmap(df_cm, annot=True, cmap='Blues', fmt='g')
    plt.ylabel("coarse")
    plt.xlabel("fine")
    _finish(output_path)
