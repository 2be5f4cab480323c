/** View state and its transitions.
 *
 * Every transition returns a fresh ViewState (or the previous one when
 * the transition is refused), so the store swaps states atomically and
 * observers never see a half-applied update.  Fields a transition does
 * not touch are carried over by reference — the tests pin this down as
 * the state-isolation guarantee: scrubbing time never mutates weights,
 * moving weights never mutates the timestep.
 */

import type { AspectName, CellRef, MetaResponse, WeightTriple } from "./types.js";
import { ASPECTS } from "./types.js";

export const DEFAULT_STEPS_PER_SECOND = 2;

export interface ViewState {
  readonly timestep: number;
  /** Raw slider positions; normalized only inside compose. */
  readonly weights: WeightTriple;
  /** Aspect panels currently shown; never empty. */
  readonly visible: ReadonlySet<AspectName>;
  readonly selected: CellRef | null;
  readonly playing: boolean;
  readonly stepsPerSecond: number;
}

export function initialState(meta: MetaResponse): ViewState {
  return {
    timestep: 0,
    weights: { ...meta.default_weights },
    visible: new Set(ASPECTS),
    selected: null,
    playing: false,
    stepsPerSecond: DEFAULT_STEPS_PER_SECOND,
  };
}

export function setTimestep(state: ViewState, timestep: number, nSteps = 96): ViewState {
  if (!Number.isInteger(timestep) || timestep < 0 || timestep >= nSteps) {
    throw new RangeError(
      `timestep must be an integer in [0, ${nSteps - 1}], got ${timestep}`,
    );
  }
  if (timestep === state.timestep) return state;
  return { ...state, timestep };
}

/** Advance one step, wrapping midnight; used by playback. */
export function advance(state: ViewState, nSteps = 96): ViewState {
  return { ...state, timestep: (state.timestep + 1) % nSteps };
}

/** Move one weight slider.  A gesture that would zero out all three is
 * refused (state returned unchanged) rather than thrown: it is a
 * reachable slider position, and the invariant must hold regardless. */
export function setWeight(
  state: ViewState,
  name: keyof WeightTriple,
  value: number,
): ViewState {
  if (!Number.isFinite(value) || value < 0) {
    throw new RangeError(`weight ${name} must be finite and nonnegative, got ${value}`);
  }
  const weights: WeightTriple = { ...state.weights, [name]: value };
  if (weights.qd + weights.qa + weights.qb <= 0) return state;
  return { ...state, weights };
}

/** Show/hide an aspect panel; hiding the last visible one is refused. */
export function toggleLayer(state: ViewState, aspect: AspectName): ViewState {
  const visible = new Set(state.visible);
  if (visible.has(aspect)) {
    if (visible.size === 1) return state;
    visible.delete(aspect);
  } else {
    visible.add(aspect);
  }
  return { ...state, visible };
}

export function selectCell(state: ViewState, cell: CellRef | null): ViewState {
  return { ...state, selected: cell };
}

export function setPlaying(state: ViewState, playing: boolean): ViewState {
  if (playing === state.playing) return state;
  return { ...state, playing };
}

export function setSpeed(state: ViewState, stepsPerSecond: number): ViewState {
  if (!Number.isFinite(stepsPerSecond) || stepsPerSecond <= 0) {
    throw new RangeError(`playback speed must be positive, got ${stepsPerSecond}`);
  }
  return { ...state, stepsPerSecond };
}

/** Holds the current ViewState; transitions land as whole-state swaps. */
export class Store {
  private state: ViewState;
  private readonly listeners = new Set<(s: ViewState) => void>();

  constructor(initial: ViewState) {
    this.state = initial;
  }

  get current(): ViewState {
    return this.state;
  }

  /** Replace the state atomically; no-op (and no notify) if unchanged. */
  apply(next: ViewState): void {
    if (next === this.state) return;
    this.state = next;
    for (const fn of [...this.listeners]) fn(next);
  }

  update(fn: (s: ViewState) => ViewState): void {
    this.apply(fn(this.state));
  }

  subscribe(fn: (s: ViewState) => void): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }
}
