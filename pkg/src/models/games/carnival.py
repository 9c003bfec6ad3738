import math
from dataclasses import dataclass, replace

from ...config import GRID_SIZE
from .base import AGENT, BALL, ENEMY, FIRE, LEFT, NOOP, RIGHT, SPECIAL, MiniGame, TaskSpec, empty_frame, mark

TARGET_COUNT = 3
SCROLL_PERIOD = 2
AMMO = 20
GUN_ROW = GRID_SIZE - 1
LOOKAHEAD_TICKS = GRID_SIZE + 2


@dataclass(frozen=True)
class CarnivalState:
    agent: int
    targets: frozenset  # columns of the top row holding a target
    ammo: int = AMMO
    bullet: tuple = None


def _respawn(targets, rng):
    free = [x for x in range(GRID_SIZE) if x not in targets]
    return targets | {int(rng.choice(free))}


class Carnival(MiniGame):
    """Targets scroll along the top row and respawn when hit; the episode ends when the ammo is spent."""

    spec = TaskSpec("mini-carnival", (NOOP, LEFT, RIGHT, FIRE), reward_range=(0.0, 1.0), min_return=0.0)

    def initial_state(self, rng):
        targets = frozenset(int(x) for x in rng.choice(GRID_SIZE, TARGET_COUNT, replace=False))
        return CarnivalState(agent=GRID_SIZE // 2, targets=targets)

    def _hit(self, targets, bullet, rng):
        if bullet is not None and bullet[0] == 0 and bullet[1] in targets:
            return _respawn(targets - {bullet[1]}, rng), None, 1.0
        return targets, bullet, 0.0

    def advance(self, game, action, rng, tick):
        agent = game.agent
        if action == LEFT:
            agent = max(0, agent - 1)
        elif action == RIGHT:
            agent = min(GRID_SIZE - 1, agent + 1)

        bullet, ammo = game.bullet, game.ammo
        if bullet is not None:
            bullet = (bullet[0] - 1, bullet[1])
            if bullet[0] < 0:
                bullet = None
        if action == FIRE and bullet is None and ammo > 0:
            bullet = (GUN_ROW - 1, agent)
            ammo -= 1

        targets, bullet, reward = self._hit(game.targets, bullet, rng)
        if tick % SCROLL_PERIOD == SCROLL_PERIOD - 1:
            targets = frozenset((x + 1) % GRID_SIZE for x in targets)
            targets, bullet, scrolled_hit = self._hit(targets, bullet, rng)
            reward += scrolled_hit

        over = ammo == 0 and bullet is None
        return replace(game, agent=agent, targets=targets, ammo=ammo, bullet=bullet), reward, over

    def render(self, game):
        frame = empty_frame()
        mark(frame, AGENT, [(GUN_ROW, game.agent)])
        if game.bullet is not None:
            mark(frame, BALL, [game.bullet])
        mark(frame, ENEMY, [(0, x) for x in game.targets])
        # ammo gauge, one cell per two shots
        mark(frame, SPECIAL, [(GUN_ROW, x) for x in range(math.ceil(game.ammo / 2))])
        return frame

    def scripted_action(self, state):
        game = state.game
        if game.bullet is not None or game.ammo == 0:
            return NOOP
        # fire only if a rollout of the shot scores
        rollout, _, reward, done = self.step(state, FIRE)
        for _ in range(LOOKAHEAD_TICKS):
            if reward > 0 or done or rollout.game.bullet is None:
                break
            rollout, _, reward, done = self.step(rollout, NOOP)
        return FIRE if reward > 0 else NOOP
