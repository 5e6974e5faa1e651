from enum import Enum


class Method(Enum):
	PSO = "pso"
	EA = "ea"


class Sense(Enum):
	MAX = "max"
	MIN = "min"
