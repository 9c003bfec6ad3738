from dataclasses import dataclass, replace

from ...config import GRID_SIZE
from .base import AGENT, BALL, DOWN, ENEMY, NOOP, SPECIAL, UP, MiniGame, TaskSpec, empty_frame, mark

PADDLE_HEIGHT = 2
AGENT_COLUMN = GRID_SIZE - 1
OPPONENT_COLUMN = 0
OPPONENT_TRACKING = 0.8
WINNING_SCORE = 3


@dataclass(frozen=True)
class PongState:
    agent: int  # top row of each paddle
    opponent: int
    ball: tuple
    velocity: tuple
    agent_score: int = 0
    opponent_score: int = 0


def _serve(rng):
    ball = (int(rng.integers(3, GRID_SIZE - 3)), GRID_SIZE // 2)
    velocity = (int(rng.choice((-1, 1))), int(rng.choice((-1, 1))))
    return ball, velocity


def _move_paddle(top, delta):
    return min(GRID_SIZE - PADDLE_HEIGHT, max(0, top + delta))


class Pong(MiniGame):
    """Agent paddle on the right, a scripted opponent on the left; first to three points."""

    spec = TaskSpec("mini-pong", (NOOP, UP, DOWN), reward_range=(-1.0, 1.0), min_return=-float(WINNING_SCORE))

    def initial_state(self, rng):
        ball, velocity = _serve(rng)
        return PongState(agent=4, opponent=4, ball=ball, velocity=velocity)

    def advance(self, game, action, rng, tick):
        agent = game.agent
        if action == UP:
            agent = _move_paddle(agent, -1)
        elif action == DOWN:
            agent = _move_paddle(agent, 1)

        (y, x), (dy, dx) = game.ball, game.velocity
        opponent = game.opponent
        if rng.random() < OPPONENT_TRACKING:
            if y < opponent:
                opponent = _move_paddle(opponent, -1)
            elif y >= opponent + PADDLE_HEIGHT:
                opponent = _move_paddle(opponent, 1)

        ny = y + dy
        if not 0 <= ny < GRID_SIZE:
            dy = -dy
            ny = y + dy
        nx = x + dx

        reward = 0.0
        agent_score, opponent_score = game.agent_score, game.opponent_score
        ball, velocity = (ny, nx), (dy, dx)
        if nx == AGENT_COLUMN:
            if agent <= ny < agent + PADDLE_HEIGHT:
                ball, velocity = (ny, x), (dy, -dx)
            else:
                reward = -1.0
                opponent_score += 1
                ball, velocity = _serve(rng)
        elif nx == OPPONENT_COLUMN:
            if opponent <= ny < opponent + PADDLE_HEIGHT:
                ball, velocity = (ny, x), (dy, -dx)
            else:
                reward = 1.0
                agent_score += 1
                ball, velocity = _serve(rng)

        over = agent_score >= WINNING_SCORE or opponent_score >= WINNING_SCORE
        game = replace(
            game,
            agent=agent,
            opponent=opponent,
            ball=ball,
            velocity=velocity,
            agent_score=agent_score,
            opponent_score=opponent_score,
        )
        return game, reward, over

    def render(self, game):
        frame = empty_frame()
        mark(frame, AGENT, [(game.agent, AGENT_COLUMN)])
        mark(frame, SPECIAL, [(game.agent + i, AGENT_COLUMN) for i in range(PADDLE_HEIGHT)])
        mark(frame, ENEMY, [(game.opponent + i, OPPONENT_COLUMN) for i in range(PADDLE_HEIGHT)])
        mark(frame, BALL, [game.ball])
        return frame

    def scripted_action(self, state):
        game = state.game
        (y, _), (dy, _) = game.ball, game.velocity
        target = y + dy
        if not 0 <= target < GRID_SIZE:
            target = y - dy
        if target < game.agent:
            return UP
        if target >= game.agent + PADDLE_HEIGHT:
            return DOWN
        return NOOP
