/**
 * Trailing debouncer, latest value wins.
 *
 * A burst of request() calls produces exactly one fn invocation, fired
 * `delayMs` after the burst goes quiet and carrying the newest value.
 */

export interface Timers {
  set: (fn: () => void, ms: number) => unknown;
  clear: (handle: unknown) => void;
}

const realTimers: Timers = {
  set: (fn, ms) => setTimeout(fn, ms),
  clear: (h) => clearTimeout(h as number),
};

export function createDebouncer<T>(
  fn: (value: T) => void,
  delayMs = 150,
  timers: Timers = realTimers,
): { request: (value: T) => void; flush: () => void; dispose: () => void } {
  let handle: unknown = null;
  let pending: T | undefined;
  let hasPending = false;

  const fire = () => {
    handle = null;
    if (hasPending) {
      hasPending = false;
      const v = pending as T;
      pending = undefined;
      fn(v);
    }
  };

  return {
    request(value: T) {
      pending = value;
      hasPending = true;
      if (handle !== null) {
        timers.clear(handle);
      }
      handle = timers.set(fire, delayMs);
    },
    flush() {
      if (handle !== null) {
        timers.clear(handle);
        fire();
      }
    },
    dispose() {
      if (handle !== null) {
        timers.clear(handle);
        handle = null;
      }
      hasPending = false;
      pending = undefined;
    },
  };
}
