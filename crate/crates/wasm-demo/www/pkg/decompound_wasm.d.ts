/* tslint:disable */
/* eslint-disable */

/**
 * Lévy density and increment law for a truth spec such as
 * `{"family":"exp_cos","lambda":1,"amplitude":0.5}`.
 */
export function increment_law_json(truth: string, delta: number, grid_points: number): string;

/**
 * The two half sine waves of intensity `lambda`: their increment laws agree
 * exactly when `λΔ = 4`.
 */
export function sine_pair_json(lambda: number, delta: number, k_max: number): string;

/**
 * Simulates `n` increments from the truth and runs the spectral estimator
 * with cutoff `K` (0 means `K = n`, capped at half the grid).
 */
export function spectral_estimate_json(truth: string, delta: number, n: number, cutoff: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly increment_law_json: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly sine_pair_json: (a: number, b: number, c: number) => [number, number, number, number];
    readonly spectral_estimate_json: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
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
