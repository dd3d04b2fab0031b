/* tslint:disable */
/* eslint-disable */

/**
 * Result of a training run. Grid values are row-major, `grid_size²` long,
 * covering `[lo, hi]²` with y increasing downwards.
 */
export class Training {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    grid(): Float32Array;
    labels(): Float32Array;
    losses(): Float32Array;
    /**
     * Interleaved x, y.
     */
    points(): Float32Array;
    readonly accuracy: number;
    readonly grid_size: number;
    readonly hi: number;
    readonly lo: number;
}

/**
 * `n` samples of an activation over `[lo, hi]`, interleaved as x, f(x), f'(x).
 * The derivative comes from the autograd pullback.
 */
export function activation_curve(name: string, lo: number, hi: number, n: number): Float32Array;

/**
 * Run the gradient-check suite and return its report text.
 */
export function gradcheck(only: string | null | undefined, seed: number, rtol: number, atol: number): string;

/**
 * Case and family names accepted by [`gradcheck`], newline separated.
 */
export function gradcheck_names(): string;

/**
 * Train the xor or blobs classifier and sample its output on a grid.
 */
export function train(task: string, seed: number, epochs: number, lr: number | null | undefined, optimizer: string | null | undefined, grid_size: number): Training;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_training_free: (a: number, b: number) => void;
    readonly activation_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => void;
    readonly gradcheck: (a: number, b: number, c: number, d: number, e: number, f: number) => void;
    readonly gradcheck_names: (a: number) => void;
    readonly train: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => void;
    readonly training_accuracy: (a: number) => number;
    readonly training_grid: (a: number, b: number) => void;
    readonly training_grid_size: (a: number) => number;
    readonly training_hi: (a: number) => number;
    readonly training_labels: (a: number, b: number) => void;
    readonly training_lo: (a: number) => number;
    readonly training_losses: (a: number, b: number) => void;
    readonly training_points: (a: number, b: number) => void;
    readonly __wbindgen_add_to_stack_pointer: (a: number) => number;
    readonly __wbindgen_export: (a: number, b: number) => number;
    readonly __wbindgen_export2: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_export3: (a: number, b: number, c: number) => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
