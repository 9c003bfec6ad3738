from dataclasses import dataclass, replace

from ...config import GRID_SIZE
from .base import AGENT, BALL, ENEMY, FIRE, LEFT, NOOP, RIGHT, SPECIAL, MiniGame, TaskSpec, empty_frame, mark

ALIEN_ROWS = (1, 2, 3)
ALIEN_COLUMNS = 6
DESCENT_PERIOD = 20
GROUND_ROW = GRID_SIZE - 1


@dataclass(frozen=True)
class InvadersState:
    agent: int
    aliens: frozenset
    projectile: tuple = None


class Invaders(MiniGame):
    """A 3x6 alien block stepping down every 20 ticks; one projectile in flight at a time."""

    spec = TaskSpec("mini-invaders", (NOOP, LEFT, RIGHT, FIRE), reward_range=(0.0, 1.0), min_return=0.0)

    def initial_state(self, rng):
        left = int(rng.integers(1, GRID_SIZE - ALIEN_COLUMNS))
        aliens = frozenset((y, left + i) for y in ALIEN_ROWS for i in range(ALIEN_COLUMNS))
        return InvadersState(agent=int(rng.integers(0, GRID_SIZE)), aliens=aliens)

    def advance(self, game, action, rng, tick):
        agent = game.agent
        if action == LEFT:
            agent = max(0, agent - 1)
        elif action == RIGHT:
            agent = min(GRID_SIZE - 1, agent + 1)

        projectile = game.projectile
        if projectile is not None:
            projectile = (projectile[0] - 1, projectile[1])
            if projectile[0] < 0:
                projectile = None
        if action == FIRE and projectile is None:
            projectile = (GROUND_ROW - 1, agent)

        aliens, reward = game.aliens, 0.0
        if projectile in aliens:
            aliens = aliens - {projectile}
            projectile = None
            reward += 1.0
        if (tick + 1) % DESCENT_PERIOD == 0:
            aliens = frozenset((y + 1, x) for y, x in aliens)
            if projectile in aliens:
                aliens = aliens - {projectile}
                projectile = None
                reward += 1.0

        over = not aliens or any(y >= GROUND_ROW for y, _ in aliens)
        return replace(game, agent=agent, aliens=aliens, projectile=projectile), reward, over

    def render(self, game):
        frame = empty_frame()
        mark(frame, AGENT, [(GROUND_ROW, game.agent)])
        if game.projectile is not None:
            mark(frame, BALL, [game.projectile])
        mark(frame, ENEMY, game.aliens)
        # lowest alien row, as a warning line on the left edge
        if game.aliens:
            mark(frame, SPECIAL, [(max(y for y, _ in game.aliens), 0)])
        return frame

    def scripted_action(self, state):
        game = state.game
        columns = {x for _, x in game.aliens}
        if game.agent in columns:
            return FIRE if game.projectile is None else NOOP
        if not columns:
            return NOOP
        target = min(columns, key=lambda c: (abs(c - game.agent), c))
        return LEFT if target < game.agent else RIGHT
