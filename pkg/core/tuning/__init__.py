from .grid_search import GridSpec, StackChoice, TrialResult, grid_search, load_grid, rank_results, write_results
