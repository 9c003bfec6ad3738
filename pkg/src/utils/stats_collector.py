import math

import numpy as np

from .metric_log import MetricRecord


class StatsCollector:
    """Collects episode statistics during one iteration and closes them into MetricRecords"""

    def __init__(self):
        self.stats = {
            "episode_returns": [],
            "episode_lengths": [],
            "all_returns": [],
            "iterations": 0,
        }

    def record_episode(self, episode_return, length):
        """Record one completed episode"""
        self.stats["episode_returns"].append(float(episode_return))
        self.stats["episode_lengths"].append(int(length))
        self.stats["all_returns"].append(float(episode_return))

    def close_iteration(self, iteration, env_steps, epsilon, percent_of_expert=math.nan):
        """Average the returns of every episode completed since the last close"""
        returns = self.stats["episode_returns"]
        record = MetricRecord(
            iteration=int(iteration),
            env_steps=int(env_steps),
            mean_return=float(np.mean(returns)) if returns else math.nan,
            episodes=len(returns),
            epsilon=float(epsilon),
            percent_of_expert=float(percent_of_expert),
        )
        self.stats["episode_returns"] = []
        self.stats["episode_lengths"] = []
        self.stats["iterations"] += 1
        return record

    def get_summary(self):
        """Get statistics summary over every recorded episode"""
        returns = self.stats["all_returns"]
        return {
            "episodes": len(returns),
            "iterations": self.stats["iterations"],
            "mean_return": np.mean(returns) if returns else 0,
            "max_return": max(returns) if returns else 0,
            "min_return": min(returns) if returns else 0,
            "std_return": np.std(returns) if returns else 0,
        }
