from dataclasses import dataclass, replace

from ...config import GRID_SIZE
from .base import AGENT, BALL, ENEMY, LEFT, NOOP, RIGHT, SPECIAL, MiniGame, TaskSpec, empty_frame, mark

PADDLE_WIDTH = 2
PADDLE_ROW = GRID_SIZE - 1
BRICK_ROWS = (1, 2)


@dataclass(frozen=True)
class BreakoutState:
    paddle: int  # leftmost paddle column
    ball: tuple
    velocity: tuple
    bricks: frozenset


class Breakout(MiniGame):
    """Two rows of bricks, a paddle two cells wide; losing the ball ends the episode."""

    spec = TaskSpec("mini-breakout", (NOOP, LEFT, RIGHT), reward_range=(0.0, 1.0), min_return=0.0)

    def initial_state(self, rng):
        bricks = frozenset((y, x) for y in BRICK_ROWS for x in range(GRID_SIZE))
        ball = (5, int(rng.integers(2, GRID_SIZE - 2)))
        velocity = (1, int(rng.choice((-1, 1))))
        return BreakoutState(paddle=4, ball=ball, velocity=velocity, bricks=bricks)

    def advance(self, game, action, rng, tick):
        paddle = game.paddle
        if action == LEFT:
            paddle = max(0, paddle - 1)
        elif action == RIGHT:
            paddle = min(GRID_SIZE - PADDLE_WIDTH, paddle + 1)

        (y, x), (dy, dx) = game.ball, game.velocity
        nx = x + dx
        if not 0 <= nx < GRID_SIZE:
            dx = -dx
            nx = x + dx
        ny = y + dy
        if ny < 0:
            dy = -dy
            ny = y + dy

        bricks, reward, over = game.bricks, 0.0, False
        if (ny, nx) in bricks:
            bricks = bricks - {(ny, nx)}
            reward = 1.0
            dy = -dy
            ny, nx = y, x
        elif ny == PADDLE_ROW:
            if paddle <= nx < paddle + PADDLE_WIDTH:
                dy = -dy
                ny, nx = y, x
            else:
                over = True
        if not bricks:
            over = True

        return replace(game, paddle=paddle, ball=(ny, nx), velocity=(dy, dx), bricks=bricks), reward, over

    def render(self, game):
        frame = empty_frame()
        mark(frame, AGENT, [(PADDLE_ROW, game.paddle)])
        mark(frame, SPECIAL, [(PADDLE_ROW, game.paddle + i) for i in range(PADDLE_WIDTH)])
        mark(frame, BALL, [game.ball])
        mark(frame, ENEMY, game.bricks)
        return frame

    def scripted_action(self, state):
        game = state.game
        (y, x), (dy, dx) = game.ball, game.velocity
        target = x
        if dy > 0:
            # column where the ball enters the paddle row
            for _ in range(PADDLE_ROW - y):
                if not 0 <= target + dx < GRID_SIZE:
                    dx = -dx
                target += dx
        if target < game.paddle:
            return LEFT
        if target >= game.paddle + PADDLE_WIDTH:
            return RIGHT
        return NOOP
