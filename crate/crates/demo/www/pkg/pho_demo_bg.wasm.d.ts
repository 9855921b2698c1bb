/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const early_vs_final: (a: number, b: number) => [number, number, number, number];
export const learning_curves: (a: number, b: number) => [number, number, number, number];
export const pho_vs_random: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
