package com.google.gson;

public class JsonNull {
    private String raw;

    public JsonNull() {
    }

    /**
     * Returns the textual value of this element.
     */
    public String getValue() {
        return raw.trim();
    }
}
