from .logger import ResultLogger, load_results
