from ..utils.logger import get_logger
from ..utils.seeding import derive_seed
from .evaluation import evaluate_policy, percent_of_expert

logger = get_logger(__name__)


class IterationMonitor:
    """Closes passive-phase iterations: greedy AMN evaluation and percent-of-expert per task"""

    def __init__(self, env, phase):
        self.env = env
        self.phase = phase
        self.iteration = 0
        self.undefined_warned = set()
        self.env.process(self.monitor())

    def monitor(self):
        """Check for an iteration boundary once per tick, after collectors and learner"""
        config = self.phase.config
        while True:
            steps = self.phase.env_steps
            if steps and (steps % config.iteration_steps == 0 or steps == config.total_steps):
                self.close_iteration(steps)
            yield self.env.timeout(1)

    def close_iteration(self, steps):
        phase, config = self.phase, self.phase.config
        self.iteration += 1
        eps = phase.epsilon()
        for task_id in phase.task_ids:
            evaluation = evaluate_policy(
                phase.state.params,
                task_id,
                config.monitor_episodes,
                config.eval_epsilon,
                derive_seed(phase.seed, "amn-monitor", task_id, self.iteration),
            )
            percent = percent_of_expert(
                evaluation.mean, phase.expert_scores[task_id], phase.baselines[task_id], self.undefined_warned
            )
            record = phase.collectors[task_id].stats.close_iteration(self.iteration, steps, eps, percent)
            phase.logs[task_id].append(record)
            policy_loss, feature_loss = phase.losses.get(task_id, (float("nan"), float("nan")))
            logger.info(
                f"[AMN {task_id}] iteration {self.iteration}: steps {steps}, "
                f"mean return {record.mean_return:.3f}, episodes {record.episodes}, "
                f"greedy {evaluation.mean:.3f}, percent of expert {percent:.3f}, "
                f"policy loss {policy_loss:.4f}, feature loss {feature_loss:.4f}"
            )
