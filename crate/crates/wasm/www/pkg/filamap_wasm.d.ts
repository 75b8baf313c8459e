/* tslint:disable */
/* eslint-disable */

export class SceneView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * σ₀ in gray with retained filaments in color, masked pixels in blue.
     */
    rgba(): Uint8Array;
    readonly components: number;
    readonly height: number;
    readonly masked: number;
    readonly truth_components: number;
    readonly width: number;
}

export function decomposition(seed: bigint, n: number, b: number, sigma_eps2: number, omega: number, delta: number): Float64Array;

/**
 * Synthetic σ₀ scene with filaments extracted from it.
 */
export function scene(seed: bigint, wind: number, filaments: number, amplitude: number, mask: boolean): SceneView;

export function sweep(seed: bigint, n: number, exponent: number, noise: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_sceneview_free: (a: number, b: number) => void;
    readonly decomposition: (a: bigint, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly scene: (a: bigint, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly sceneview_components: (a: number) => number;
    readonly sceneview_height: (a: number) => number;
    readonly sceneview_masked: (a: number) => number;
    readonly sceneview_rgba: (a: number) => [number, number];
    readonly sceneview_truth_components: (a: number) => number;
    readonly sceneview_width: (a: number) => number;
    readonly sweep: (a: bigint, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
