# Grid games
GRID_SIZE = 10
OBJECT_CHANNELS = 4  # agent, ball/projectile, enemy/brick, special
FRAME_STACK = 2
OBSERVATION_SHAPE = (GRID_SIZE, GRID_SIZE, OBJECT_CHANNELS * FRAME_STACK)
EPISODE_STEP_CAP = 500

# Global action alphabet shared by every game
ACTION_NAMES = ("noop", "left", "right", "up", "down", "fire")
NUM_ACTIONS = len(ACTION_NAMES)

# Network shape (3 conv + 2 dense)
CONV_FILTERS = 16
CONV_KERNEL = 3
CONV_STRIDES = (1, 2, 1)
FEATURE_WIDTH = 64

# Prioritized replay
REPLAY_CAPACITY = 50_000
PRIORITY_ALPHA = 0.6
PRIORITY_BETA_START = 0.4
PRIORITY_BETA_END = 1.0
PRIORITY_FLOOR = 1e-6

# Active phase (expert training)
ACTIVE_TOTAL_STEPS = 150_000
ITERATION_STEPS = 5_000  # 50_000 for full-scale runs
EPSILON_START = 1.0
EPSILON_END = 0.1
EPSILON_ANNEAL_STEPS = 50_000
GAMMA = 0.99
N_STEP = 3
TARGET_SYNC_STEPS = 1_000
BATCH_SIZE = 32
LEARN_EVERY = 4
WARMUP_STEPS = 1_000
ACTIVE_LEARNING_RATE = 2.5e-4
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1.5e-4
HUBER_DELTA = 1.0

# Passive phase (consolidation)
PASSIVE_ITERATIONS = 15
PASSIVE_SHORT_ITERATIONS = 5
PASSIVE_TOTAL_STEPS = PASSIVE_ITERATIONS * ITERATION_STEPS
PASSIVE_SHORT_STEPS = PASSIVE_SHORT_ITERATIONS * ITERATION_STEPS
TEMPERATURE = 1.0
FEATURE_LOSS_WEIGHT = 0.01
PASSIVE_LEARNING_RATE = 1e-4
ENV_STEPS_PER_UPDATE = 4
MONITOR_EVAL_EPISODES = 10

# Evaluation
EVAL_EPISODES = 30
EVAL_EPSILON = 0.001
BASELINE_EPISODES = 100

# Experiments
DEFAULT_SEEDS = (0, 1, 2)
RUNS_DIR = "runs"
LAB_DIR_ENV = "CONSOL_LAB_DIR"
LOG_DIR = "logs"
