from .render import JobError, PlotJob, read_grid, read_points, render

__all__ = ["JobError", "PlotJob", "read_grid", "read_points", "render"]
