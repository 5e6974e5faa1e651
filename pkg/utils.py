import os

# Offsets of the per-purpose random streams derived from the master seed.
SEED_OFFSETS = {
	"functionals": 1,
	"directions": 2,
	"positions": 3,
	"q": 4,
	"optimizer": 5,
	"simulator": 6,
}


def seed_for(master_seed, purpose):
	return int(master_seed) + SEED_OFFSETS[purpose]


def get_output(out_dir, name):
	os.makedirs(out_dir, exist_ok=True)
	return os.path.join(out_dir, name)
