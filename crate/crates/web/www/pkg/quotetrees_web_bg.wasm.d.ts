/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const depth2_demo: (a: number, b: number, c: number) => [number, number];
export const divergence_demo: (a: number, b: number, c: number) => [number, number];
export const ip_posterior: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
