/** Wire types for the four service endpoints (shapes match the JSON exactly). */
export {};
