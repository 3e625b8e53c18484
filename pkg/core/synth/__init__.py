from .generator import GROUND_TRUTH_FILE, INJECTIONS_FILE, GeneratedData, ScenarioGenerator, federal_holidays, generate
from .scenario import DurationSpec, ScenarioConfig, load_scenario
