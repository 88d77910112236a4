/* tslint:disable */
/* eslint-disable */

/**
 * Secondary-quoter drift `<D2> - D1` against `D1 - rho`.
 */
export function depth2_demo(kappa: number, p_depth: number, seed: number): string;

/**
 * `<Q> - <R>` against the root author's valence for a synthetic forest.
 */
export function divergence_demo(lambda: number, sigma_q: number, seed: number): string;

/**
 * MAP ideal point of one user who follows the elites flagged in `followed`.
 * Elites sit at `phi` with zero popularity intercept.
 */
export function ip_posterior(phi: Float64Array, followed: Uint8Array, gamma: number, prior_sd_theta: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly depth2_demo: (a: number, b: number, c: number) => [number, number];
    readonly divergence_demo: (a: number, b: number, c: number) => [number, number];
    readonly ip_posterior: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
