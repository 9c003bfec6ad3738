from dataclasses import dataclass, replace

from ...config import GRID_SIZE
from .base import AGENT, BALL, ENEMY, FIRE, LEFT, NOOP, RIGHT, SPECIAL, MiniGame, TaskSpec, empty_frame, mark

BUMPERS = frozenset({(2, 6), (3, 2), (5, 4)})
LEFT_FLIPPER = range(1, 5)
RIGHT_FLIPPER = range(5, 9)
FLIPPER_ROW = GRID_SIZE - 1
PLUNGER = (GRID_SIZE - 2, GRID_SIZE - 1)
LAUNCH_LIFT = 8
BUMPER_KICK = 3
BALLS = 3


@dataclass(frozen=True)
class PinballState:
    ball: tuple
    waiting: bool = True  # ball resting on the plunger
    lift: int = 0  # remaining upward ticks
    fall_phase: int = 0
    vx: int = -1
    balls_left: int = BALLS
    flipper: int = NOOP  # flipper raised this tick, for rendering


class Pinball(MiniGame):
    """
    Gravity pulls the ball down one cell every two ticks. Bumpers pay +1 and kick the ball back;
    a raised flipper under a falling ball launches it upward again. Three balls per episode.
    """

    spec = TaskSpec("mini-pinball", (NOOP, LEFT, RIGHT, FIRE), reward_range=(0.0, 1.0), min_return=0.0)

    def initial_state(self, rng):
        return PinballState(ball=PLUNGER)

    def advance(self, game, action, rng, tick):
        flipper = action if action in (LEFT, RIGHT) else NOOP
        if game.waiting:
            if action == FIRE:
                return replace(game, waiting=False, lift=LAUNCH_LIFT, fall_phase=0, vx=-1, flipper=flipper), 0.0, False
            return replace(game, flipper=flipper), 0.0, False

        (y, x), lift, phase, vx = game.ball, game.lift, game.fall_phase, game.vx
        if lift > 0:
            dy = -1
            lift -= 1
        else:
            dy = phase
            phase ^= 1
        ny = y + dy
        if ny < 0:
            ny, lift = y, 0
        nx = x + vx
        if not 0 <= nx < GRID_SIZE:
            vx = -vx
            nx = x + vx

        reward, over, balls_left, waiting = 0.0, False, game.balls_left, False
        if (ny, nx) in BUMPERS:
            reward = 1.0
            vx = -vx
            lift = 0 if dy < 0 else BUMPER_KICK
            ny, nx = y, x
        elif ny == FLIPPER_ROW:
            raised = (action == LEFT and nx in LEFT_FLIPPER) or (action == RIGHT and nx in RIGHT_FLIPPER)
            if raised:
                lift = int(rng.integers(5, 9))
                vx = int(rng.choice((-1, 1)))
                phase = 0
                ny, nx = y, x
            else:
                balls_left -= 1
                if balls_left == 0:
                    over = True
                else:
                    waiting, lift, phase, vx = True, 0, 0, -1
                    ny, nx = PLUNGER

        game = PinballState(
            ball=(ny, nx),
            waiting=waiting,
            lift=lift,
            fall_phase=phase,
            vx=vx,
            balls_left=balls_left,
            flipper=flipper,
        )
        return game, reward, over

    def render(self, game):
        frame = empty_frame()
        if game.flipper == LEFT:
            mark(frame, AGENT, [(FLIPPER_ROW, LEFT_FLIPPER[1])])
        elif game.flipper == RIGHT:
            mark(frame, AGENT, [(FLIPPER_ROW, RIGHT_FLIPPER[-2])])
        mark(frame, BALL, [game.ball])
        mark(frame, ENEMY, BUMPERS)
        mark(frame, SPECIAL, [(FLIPPER_ROW, x) for x in (*LEFT_FLIPPER, *RIGHT_FLIPPER)])
        return frame

    def scripted_action(self, state):
        game = state.game
        if game.waiting:
            return FIRE
        (y, x), vx = game.ball, game.vx
        if game.lift == 0 and game.fall_phase == 1 and y == FLIPPER_ROW - 1:
            nx = x + vx
            if not 0 <= nx < GRID_SIZE:
                nx = x - vx
            if nx in LEFT_FLIPPER:
                return LEFT
            if nx in RIGHT_FLIPPER:
                return RIGHT
        return NOOP
