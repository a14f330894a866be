/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const contains: (a: number, b: number, c: number, d: number) => number;
export const hull_buffer: (a: number, b: number, c: number) => [number, number];
export const mad_flags: (a: number, b: number, c: number, d: number) => [number, number];
export const resample_1hz: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const smooth: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
