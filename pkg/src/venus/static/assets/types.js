/** Wire types mirrored from the toolchain's JSON schemas. */
export {};
