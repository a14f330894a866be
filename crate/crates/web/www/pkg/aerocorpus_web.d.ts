/* tslint:disable */
/* eslint-disable */

/**
 * Whether `(lon, lat)` lies inside the polygon ring.
 */
export function contains(ring: Float64Array, lon: number, lat: number): boolean;

/**
 * Convex hull of the points, buffered outward by `buffer_nm`. Empty when
 * the points do not span an area.
 */
export function hull_buffer(lonlat: Float64Array, buffer_nm: number): Float64Array;

/**
 * Outlier mask (1 = outlier) using the scaled-MAD rule with a floor for
 * zero-MAD series.
 */
export function mad_flags(values: Float64Array, threshold: number, zero_mad_floor: number): Uint8Array;

/**
 * Linear 1 Hz resampling of an altitude series. Empty when fewer than
 * `min_points` samples remain.
 */
export function resample_1hz(times: Float64Array, values: Float64Array, min_points: number): Float64Array;

/**
 * Gaussian-weighted smoothing over a time window in seconds.
 */
export function smooth(times: Float64Array, values: Float64Array, window: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly contains: (a: number, b: number, c: number, d: number) => number;
    readonly hull_buffer: (a: number, b: number, c: number) => [number, number];
    readonly mad_flags: (a: number, b: number, c: number, d: number) => [number, number];
    readonly resample_1hz: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly smooth: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
