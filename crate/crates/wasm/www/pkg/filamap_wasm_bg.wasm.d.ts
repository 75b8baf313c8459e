/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_sceneview_free: (a: number, b: number) => void;
export const decomposition: (a: bigint, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const scene: (a: bigint, b: number, c: number, d: number, e: number) => [number, number, number];
export const sceneview_components: (a: number) => number;
export const sceneview_height: (a: number) => number;
export const sceneview_masked: (a: number) => number;
export const sceneview_rgba: (a: number) => [number, number];
export const sceneview_truth_components: (a: number) => number;
export const sceneview_width: (a: number) => number;
export const sweep: (a: bigint, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
